#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tpt {

struct ProcessSpec {
    std::vector<std::string> argv;
    std::filesystem::path working_dir;  // empty: inherit
    std::string stdin_data;
    std::optional<std::chrono::milliseconds> wall_limit;
    // Negative: unlimited. Exceeding the cap kills the process group.
    std::int64_t stdout_cap_bytes = -1;
    // When set, stdout and stderr both go to this file and nothing is captured.
    std::optional<std::filesystem::path> log_file;
    // Best effort: new network namespace (needs privileges; silently skipped otherwise).
    bool isolate_network = false;
    std::optional<std::uint64_t> address_space_limit_bytes;
};

struct ProcessResult {
    bool launched = false;
    int launch_errno = 0;
    bool timed_out = false;
    bool output_overflow = false;
    std::optional<int> exit_code;
    std::optional<int> term_signal;
    std::string stdout_data;
    std::chrono::milliseconds wall{0};

    bool exited_cleanly() const noexcept { return launched && exit_code && *exit_code == 0; }
};

// Forks and execs argv[0] (PATH-searched) in its own process group with stdin
// piped. Blocks until the process exits, times out, or overflows its output cap.
ProcessResult run_process(const ProcessSpec& spec);

// PATH lookup; names containing '/' are checked directly.
std::optional<std::filesystem::path> find_executable(std::string_view name);

}  // namespace tpt
