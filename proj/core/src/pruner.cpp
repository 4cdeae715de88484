#include "tpt/pruner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "tpt/error.hpp"
#include "tpt/text.hpp"

namespace tpt::pruner {

std::string_view to_string(PruneMode m) {
    switch (m) {
        case PruneMode::Full: return "full";
        case PruneMode::SoftPos: return "softpos";
        case PruneMode::NoPrune: return "noprune";
    }
    return "?";
}

std::string_view to_string(Normalization n) { return n == Normalization::Strict ? "strict" : "trim_only"; }

PruneMode prune_mode_from_string(std::string_view s) {
    if (s == "full") return PruneMode::Full;
    if (s == "softpos") return PruneMode::SoftPos;
    if (s == "noprune") return PruneMode::NoPrune;
    throw ConfigError(fmt::format("unknown prune mode '{}'", s));
}

Normalization normalization_from_string(std::string_view s) {
    if (s == "strict") return Normalization::Strict;
    if (s == "trim_only") return Normalization::TrimOnly;
    throw ConfigError(fmt::format("unknown normalization '{}'", s));
}

std::optional<ExtractedAnswer> extract_final_answer(std::string_view text, std::string_view marker) {
    if (marker.empty()) throw std::invalid_argument("extraction marker must be non-empty");
    const auto pos = text.rfind(marker);
    if (pos == std::string_view::npos) return std::nullopt;

    auto tail = text.substr(pos + marker.size());
    tail = tail.substr(0, tail.find('\n'));
    if (!tail.empty() && tail.back() == '\r') tail.remove_suffix(1);

    auto strip = [](char c) { return c == '*' || c == '_' || c == ' ' || c == '\t' || c == '\r'; };
    auto norm = tail;
    while (!norm.empty() && strip(norm.front())) norm.remove_prefix(1);
    while (!norm.empty() && strip(norm.back())) norm.remove_suffix(1);
    if (norm.empty()) return std::nullopt;

    ExtractedAnswer out;
    out.raw_tail = std::string(tail);
    out.normalized = std::string(norm);
    out.marker_count = static_cast<int>(text::count_occurrences(text, marker));
    return out;
}

Verdict verify_math(const std::optional<ExtractedAnswer>& extracted, std::string_view truth,
                    Normalization normalization) {
    if (truth.empty()) throw std::invalid_argument("ground-truth answer must be non-empty");
    if (!extracted) return Verdict::Unparseable;
    if (normalization == Normalization::TrimOnly) truth = text::trim(truth);
    return extracted->normalized == truth ? Verdict::Correct : Verdict::Incorrect;
}

std::optional<std::string> extract_code_block(std::string_view text) {
    const auto open = text.find("```");
    if (open == std::string_view::npos) return std::nullopt;
    const auto body_start = text.find('\n', open);
    if (body_start == std::string_view::npos) return std::nullopt;
    // The closing fence must start a line.
    for (auto pos = text.find("```", body_start + 1); pos != std::string_view::npos;
         pos = text.find("```", pos + 3)) {
        if (text[pos - 1] == '\n') return std::string(text.substr(body_start + 1, pos - body_start - 1));
    }
    return std::nullopt;
}

bool keeps(PruneMode mode, Verdict verdict) noexcept {
    switch (mode) {
        case PruneMode::Full: return verdict == Verdict::Correct;
        case PruneMode::SoftPos: return verdict == Verdict::Correct || verdict == Verdict::SoftCorrect;
        case PruneMode::NoPrune: return verdict != Verdict::Unparseable && verdict != Verdict::Error;
    }
    return false;
}

std::vector<SolutionRecord> apply_strategy(std::span<const SolutionRecord> records, const PruneStrategy& strategy) {
    std::vector<SolutionRecord> kept;
    for (const auto& r : records) {
        if (!r.verdict) {
            throw ValidationError(
                fmt::format("record for '{}' sample {} has no verdict", r.problem_id, r.sample_index));
        }
        if (keeps(strategy.mode, *r.verdict)) kept.push_back(r);
    }
    return kept;
}

ProblemIndex index_problems(std::span<const ProblemSpec> problems) {
    ProblemIndex index;
    for (const auto& p : problems) index.emplace(p.id, &p);
    return index;
}

namespace {

void verify_one(SolutionRecord& r, const ProblemSpec& problem, const VerifyOptions& options) {
    r.extracted.reset();
    r.exec.reset();
    if (problem.kind() == TaskKind::Math) {
        r.extracted = extract_final_answer(r.text, options.marker);
        r.verdict = r.truncated ? Verdict::Unparseable
                                : verify_math(r.extracted, problem.final_answer(), options.normalization);
        return;
    }
    if (r.truncated) {
        r.verdict = Verdict::Unparseable;
        return;
    }
    const auto program = extract_code_block(r.text);
    if (!program) {
        r.verdict = Verdict::Unparseable;
        return;
    }
    auto judged = judge_code(*program, problem.test_cases(), options.runner);
    r.exec = std::move(judged.outcomes);
    r.verdict = judged.verdict;
}

}  // namespace

void assign_verdicts(std::vector<SolutionRecord>& records, const ProblemIndex& problems, const VerifyOptions& options) {
    std::vector<const ProblemSpec*> targets(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = problems.find(records[i].problem_id);
        if (it == problems.end()) {
            throw ValidationError(fmt::format("record references unknown problem '{}'", records[i].problem_id));
        }
        targets[i] = it->second;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
            try {
                verify_one(records[i], *targets[i], options);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                next = records.size();
            }
        }
    };
    const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), 1,
                                           std::max<std::size_t>(records.size(), 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);
}

Verdict recompute_verdict(const SolutionRecord& record, const ProblemSpec& problem, Normalization normalization) {
    if (record.truncated) return Verdict::Unparseable;
    if (problem.kind() == TaskKind::Math) return verify_math(record.extracted, problem.final_answer(), normalization);
    if (!record.exec) return Verdict::Unparseable;
    return verdict_from_outcomes(*record.exec, problem.test_cases().size());
}

}  // namespace tpt::pruner
