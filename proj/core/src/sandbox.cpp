#include "tpt/sandbox.hpp"

#include <stdlib.h>

#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "tpt/error.hpp"
#include "tpt/process.hpp"
#include "tpt/text.hpp"

namespace tpt::pruner {
namespace fs = std::filesystem;

namespace {

// Owns a mkdtemp directory and removes it on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const fs::path& root) {
        auto base = root.empty() ? fs::temp_directory_path() : root;
        std::string templ = (base / "tpt-judge-XXXXXX").string();
        if (::mkdtemp(templ.data()) == nullptr) throw SandboxError("mkdtemp failed under " + base.string());
        path_ = templ;
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
};

std::vector<std::string> expand(const std::vector<std::string>& templ, const fs::path& file, const fs::path& dir) {
    std::vector<std::string> argv;
    argv.reserve(templ.size());
    for (const auto& a : templ) {
        argv.push_back(text::replace_all(text::replace_all(a, "{file}", file.string()), "{dir}", dir.string()));
    }
    return argv;
}

void require_binary(const std::vector<std::string>& command, std::string_view role) {
    if (command.empty()) throw SandboxError(fmt::format("{} command is empty", role));
    // Placeholder commands name build outputs that do not exist yet.
    if (command.front().find('{') != std::string::npos) return;
    if (!find_executable(command.front())) {
        throw SandboxError(fmt::format("{} binary '{}' not found", role, command.front()));
    }
}

void write_program(const fs::path& path, std::string_view program) {
    std::ofstream out(path, std::ios::binary);
    out.write(program.data(), static_cast<std::streamsize>(program.size()));
    if (!out) throw SandboxError("cannot write program file " + path.string());
}

std::string normalize_output(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    const auto lines = text::split_lines(s);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out.append(text::trim_right(lines[i]));
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace

bool outputs_match(std::string_view produced, std::string_view expected, bool exact) {
    if (exact) return produced == expected;
    return normalize_output(produced) == normalize_output(expected);
}

Verdict verdict_from_outcomes(std::span<const ExecOutcome> outcomes, std::size_t n_tests) {
    if (outcomes.empty() || outcomes.size() != n_tests) return Verdict::Error;
    std::size_t passes = 0;
    for (const auto& o : outcomes) passes += o.status == ExecStatus::Pass;
    if (passes == outcomes.size()) return Verdict::Correct;
    return passes > 0 ? Verdict::SoftCorrect : Verdict::Incorrect;
}

JudgeResult judge_code(std::string_view program, std::span<const TestCase> tests, const RunnerConfig& runner) {
    require_binary(runner.command, "runner");
    if (!runner.compile_command.empty()) require_binary(runner.compile_command, "compiler");
    if (tests.empty()) throw std::invalid_argument("judge_code needs at least one test case");

    JudgeResult result;
    std::optional<ScratchDir> build;
    if (!runner.compile_command.empty()) {
        build.emplace(runner.temp_root);
        const auto src = build->path() / runner.file_name;
        write_program(src, program);
        ProcessSpec cs;
        cs.argv = expand(runner.compile_command, src, build->path());
        cs.working_dir = build->path();
        cs.wall_limit = std::chrono::milliseconds(runner.compile_wall_ms);
        cs.stdout_cap_bytes = 1 << 16;
        const auto compiled = run_process(cs);
        if (!compiled.exited_cleanly()) {
            result.verdict = Verdict::Error;
            result.diagnostic = compiled.launched ? "build step failed" : "build step could not be launched";
            return result;
        }
    }

    for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto& test = tests[i];
        ScratchDir dir(runner.temp_root);
        if (build) {
            fs::copy(build->path(), dir.path(), fs::copy_options::recursive | fs::copy_options::overwrite_existing);
        } else {
            write_program(dir.path() / runner.file_name, program);
        }

        const int wall_ms = runner.wall_ms.value_or(test.limits.wall_ms);
        ProcessSpec ps;
        ps.argv = expand(runner.command, dir.path() / runner.file_name, dir.path());
        ps.working_dir = dir.path();
        ps.stdin_data = test.stdin_data;
        ps.wall_limit = std::chrono::milliseconds(wall_ms);
        ps.stdout_cap_bytes = runner.output_cap_bytes.value_or(test.limits.output_cap_bytes);
        ps.isolate_network = runner.isolate_network;
        ps.address_space_limit_bytes = runner.memory_limit_bytes;

        const auto run = run_process(ps);
        if (!run.launched) {
            result.outcomes.clear();
            result.verdict = Verdict::Error;
            result.diagnostic = fmt::format("program could not be launched: {}", std::strerror(run.launch_errno));
            return result;
        }

        ExecOutcome outcome;
        outcome.test_index = static_cast<int>(i);
        outcome.wall_ms_used = run.wall.count();
        if (run.timed_out) {
            outcome.status = ExecStatus::Timeout;
        } else if (run.output_overflow) {
            outcome.status = ExecStatus::OutputOverflow;
        } else if (!run.exited_cleanly()) {
            outcome.status = ExecStatus::RuntimeError;
        } else {
            outcome.status = outputs_match(run.stdout_data, test.expected_stdout, runner.exact_bytes)
                                 ? ExecStatus::Pass
                                 : ExecStatus::WrongOutput;
        }
        result.outcomes.push_back(outcome);
    }
    result.verdict = verdict_from_outcomes(result.outcomes, tests.size());
    return result;
}

}  // namespace tpt::pruner
