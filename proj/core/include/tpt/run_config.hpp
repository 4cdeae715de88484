#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpt/chat_client.hpp"
#include "tpt/curator.hpp"
#include "tpt/generator.hpp"
#include "tpt/pruner.hpp"
#include "tpt/trainhook.hpp"
#include "tpt/types.hpp"

namespace tpt {

struct EvalConfig {
    int subset_size = 500;
    std::vector<int> k_list{1, 20};
    double temperature = 0.7;
    int n_samples = 20;
    Split split = Split::Test;
    // When set, the subset is a seeded random draw instead of the first
    // subset_size problems in file order.
    std::optional<std::int64_t> subset_seed;
};

struct GenerationConfig {
    generator::SamplingParams sampling = generator::SamplingParams::generation_defaults();
    int max_in_flight = 8;
    int max_attempts = 3;
    int backoff_base_ms = 500;
};

struct TrainerConfig {
    std::vector<std::string> hook{"tpt-stub-trainer"};
    trainhook::Overrides overrides;
};

struct RunConfig {
    std::string run_id = "run";
    std::filesystem::path runs_root = "runs";
    std::filesystem::path problems_path;
    TaskKind kind = TaskKind::Math;
    ModelRef base_model;
    int rounds = 4;
    GenerationConfig generation;
    EvalConfig eval;
    pruner::PruneStrategy prune;
    curator::CurationPolicy curation = curator::CurationPolicy::defaults_for(TaskKind::Math);
    TrainerConfig trainer;
    pruner::RunnerConfig judge;
    generator::EndpointOptions endpoint;
    int verify_threads = 4;
    std::int64_t seed = 0;

    // Throws ConfigError on any out-of-range field.
    void validate() const;
};

// Parses a config document. Relative paths (problems, simulated model state,
// real-data source) are resolved against `base_dir`. Missing fields take the
// recipe defaults; curation.target_size defaults by task kind.
RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json run_config_to_json(const RunConfig& config);

// The experiment-defining part of the config (no run id / runs root), as
// recorded in every round manifest.
nlohmann::json config_snapshot(const RunConfig& config);

// Applies "a.b.c=value" overrides; value is parsed as JSON when possible,
// otherwise taken as a string.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace tpt
