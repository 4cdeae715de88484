#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tpt/sandbox.hpp"
#include "tpt/types.hpp"

namespace tpt::pruner {

inline constexpr std::string_view kDefaultMarker = "#### ";

enum class PruneMode { Full, SoftPos, NoPrune };
enum class Normalization { Strict, TrimOnly };

struct PruneStrategy {
    PruneMode mode = PruneMode::Full;
    Normalization normalization = Normalization::Strict;
};

std::string_view to_string(PruneMode m);
std::string_view to_string(Normalization n);
PruneMode prune_mode_from_string(std::string_view s);
Normalization normalization_from_string(std::string_view s);

// Final-answer extraction. Uses the LAST marker occurrence; the tail runs to
// end of line and is stripped of whitespace and markdown emphasis (* and _).
// nullopt means Unparseable (no marker, or nothing left after stripping).
std::optional<ExtractedAnswer> extract_final_answer(std::string_view text,
                                                    std::string_view marker = kDefaultMarker);

// Byte-exact comparison of the extracted answer against the ground truth.
// TrimOnly additionally trims surrounding whitespace from `truth`.
Verdict verify_math(const std::optional<ExtractedAnswer>& extracted, std::string_view truth,
                    Normalization normalization = Normalization::Strict);

// Body of the first ``` fenced block; nullopt when there is none or it is unclosed.
std::optional<std::string> extract_code_block(std::string_view text);

bool keeps(PruneMode mode, Verdict verdict) noexcept;

// Pure filter preserving input order. Throws ValidationError on a record
// without a verdict.
std::vector<SolutionRecord> apply_strategy(std::span<const SolutionRecord> records, const PruneStrategy& strategy);

struct VerifyOptions {
    std::string marker{kDefaultMarker};
    Normalization normalization = Normalization::Strict;
    RunnerConfig runner;
    int threads = 4;
};

using ProblemIndex = std::unordered_map<std::string, const ProblemSpec*>;
ProblemIndex index_problems(std::span<const ProblemSpec> problems);

// Fills extracted/exec/verdict on every record. Code records are judged in
// parallel. Unknown problem ids raise ValidationError.
void assign_verdicts(std::vector<SolutionRecord>& records, const ProblemIndex& problems, const VerifyOptions& options);

// Recomputes the verdict from stored fields only (no re-execution).
Verdict recompute_verdict(const SolutionRecord& record, const ProblemSpec& problem,
                          Normalization normalization = Normalization::Strict);

}  // namespace tpt::pruner
