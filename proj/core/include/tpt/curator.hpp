#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpt/types.hpp"

namespace tpt::curator {

enum class Shortfall { TakeAll, Fail };

struct MixSpec {
    double real_fraction = 0.0;
    std::filesystem::path real_source;

    bool operator==(const MixSpec&) const = default;
};

struct CurationPolicy {
    int target_size = 2000;
    int per_question_cap = 1;
    bool accumulate = false;
    std::optional<MixSpec> mix;
    std::int64_t seed = 0;
    Shortfall shortfall = Shortfall::TakeAll;

    // 2000 for math sets, 1000 for code sets.
    static CurationPolicy defaults_for(TaskKind kind);
    void validate() const;

    bool operator==(const CurationPolicy&) const = default;
};

enum class PairOrigin { Synthetic, Real };

struct TrainingPair {
    std::string problem_id;
    std::string prompt;
    std::string completion;
    // Round whose generations produced the completion; -1 for real data.
    int source_round = 0;
    PairOrigin origin = PairOrigin::Synthetic;

    bool operator==(const TrainingPair&) const = default;
};

struct CuratedDataset {
    std::vector<TrainingPair> pairs;
    int source_round = 0;
    // sha256 of serialize_dataset(*this); equals digest_file() of the written file.
    std::string digest;
    CurationPolicy policy_snapshot;
    std::optional<std::string> shortfall_note;
};

using PromptLookup = std::function<std::string(const std::string& problem_id)>;

// Drops records whose (problem id, whitespace-collapsed text) was already
// seen; first occurrence wins.
std::vector<SolutionRecord> dedupe(std::span<const SolutionRecord> records);

// Per-question cap, then a uniform sample without replacement down to
// target_size. Selection keys hash (seed, problem id, normalized text), so the
// result does not depend on input order.
CuratedDataset sample_dataset(std::span<const SolutionRecord> unique, const CurationPolicy& policy, int round,
                              const PromptLookup& prompt_for);

// Over a candidate pool of pairs (used when accumulating prior rounds).
CuratedDataset sample_pairs(std::span<const TrainingPair> candidates, const CurationPolicy& policy, int round);

// Replaces a real_fraction share of target_size with pairs drawn from
// `real_pool`. Throws ValidationError when the real pool is too small.
CuratedDataset mix_real(const CuratedDataset& synthetic, const MixSpec& mix, std::span<const TrainingPair> real_pool);

std::string serialize_dataset(const CuratedDataset& dataset);
// Recomputes the digest and writes the exact bytes it covers.
void write_dataset(CuratedDataset& dataset, const std::filesystem::path& path);
std::vector<TrainingPair> read_pairs(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const TrainingPair& v);
void from_json(const nlohmann::json& j, TrainingPair& v);
void to_json(nlohmann::json& j, const CurationPolicy& v);
void from_json(const nlohmann::json& j, CurationPolicy& v);

}  // namespace tpt::curator
