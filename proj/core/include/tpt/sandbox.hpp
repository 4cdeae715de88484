#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpt/types.hpp"

namespace tpt::pruner {

// How candidate programs are executed. "{file}" in a command is replaced by
// the absolute program path and "{dir}" by the per-test working directory.
struct RunnerConfig {
    std::vector<std::string> command{"python3", "{file}"};
    std::string file_name = "main.py";
    // Optional build step run once per program inside a scratch dir; its
    // outputs are copied into every test directory.
    std::vector<std::string> compile_command;
    int compile_wall_ms = 30'000;
    // Compare stdout byte-for-byte instead of the trailing-whitespace rule.
    bool exact_bytes = false;
    bool isolate_network = true;
    std::optional<std::uint64_t> memory_limit_bytes;
    // Override per-test limits from the problem set when set.
    std::optional<int> wall_ms;
    std::optional<std::int64_t> output_cap_bytes;
    std::filesystem::path temp_root;  // empty: system temp directory
};

struct JudgeResult {
    std::vector<ExecOutcome> outcomes;
    Verdict verdict = Verdict::Error;
    std::string diagnostic;
};

// Output comparison: per-line trailing whitespace is ignored together with
// one trailing newline, unless `exact`.
bool outputs_match(std::string_view produced, std::string_view expected, bool exact = false);

// Correct iff every test passed, SoftCorrect iff at least one, Incorrect
// iff none. No outcomes (the program never ran) is Error.
Verdict verdict_from_outcomes(std::span<const ExecOutcome> outcomes, std::size_t n_tests);

// Runs `program` once per test in a fresh child process and temp dir.
// Throws SandboxError when the runner itself is unusable (missing binary);
// a program that cannot be launched or built yields Verdict::Error.
JudgeResult judge_code(std::string_view program, std::span<const TestCase> tests, const RunnerConfig& runner);

}  // namespace tpt::pruner
