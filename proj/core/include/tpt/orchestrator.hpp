#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpt/curator.hpp"
#include "tpt/evalkit.hpp"
#include "tpt/generator.hpp"
#include "tpt/run_config.hpp"
#include "tpt/run_dir.hpp"
#include "tpt/trainhook.hpp"
#include "tpt/types.hpp"

namespace tpt {

struct RunState {
    // Training rounds finished (registry length); round 0 does not train.
    int completed_rounds = 0;
    bool bootstrapped = false;
    trainhook::ModelRegistry registry;
    std::vector<RoundManifest> manifests;
    std::vector<evalkit::EvalReport> eval_reports;
    // Latest model; its uri is relative to the run directory when simulated.
    ModelRef current_model;
};

using BackendFactory =
    std::function<std::unique_ptr<generator::InferenceBackend>(const ModelRef& model, const std::filesystem::path& base_dir)>;

// Simulated refs load their state file (relative to base_dir); endpoint refs
// become chat-completions clients.
std::unique_ptr<generator::InferenceBackend> make_backend(const ModelRef& model, const std::filesystem::path& base_dir,
                                                          const generator::EndpointOptions& endpoint);

struct RunOptions {
    // Stop once this round's manifest is written (rounds are 0-based; 0 is the bootstrap).
    std::optional<int> stop_after_round;
    std::function<void(int round, std::string_view stage)> on_stage;
    // Defaults to make_backend with the config's endpoint options.
    BackendFactory backend_factory;
};

// Starts a run, or continues it when the run directory already holds the
// same config (a different config there is a ConfigError).
RunState run_tpt(const RunConfig& config, const RunOptions& options = {});

// Verifies every completed round against its manifest digests, drops any
// partial round, and continues from the first incomplete one.
RunState resume(const std::filesystem::path& runs_root, const std::string& run_id, const RunOptions& options = {});

// Reconstructs state from the run directory alone. Throws IntegrityError
// naming the first file whose digest no longer matches.
RunState load_run_state(const RunDir& dir, const RunConfig& config);

RunConfig load_stored_config(const RunDir& dir);

// Stage building blocks shared by the round driver and the CLI.
namespace stages {

std::vector<ProblemSpec> train_problems(const std::vector<ProblemSpec>& all);
// First subset_size problems of the eval split (file order), or a seeded draw.
std::vector<ProblemSpec> eval_problems(const std::vector<ProblemSpec>& all, const EvalConfig& eval);

generator::GenerationResult generate(const RunConfig& config, generator::InferenceBackend& backend, const ModelRef& model,
                                     std::span<const ProblemSpec> problems, int round);

// Assigns verdicts in place.
void judge(const RunConfig& config, std::vector<SolutionRecord>& records, std::span<const ProblemSpec> problems);

std::vector<SolutionRecord> prune(const RunConfig& config, std::span<const SolutionRecord> judged);

// `previous` is the prior round's dataset, used only when accumulating.
curator::CuratedDataset curate(const RunConfig& config, std::span<const SolutionRecord> pruned,
                               std::span<const ProblemSpec> problems, int round,
                               std::span<const curator::TrainingPair> previous = {});

// Samples eval.n_samples per problem at the eval temperature; the judged
// samples are returned through `samples` when non-null.
evalkit::EvalReport evaluate(const RunConfig& config, generator::InferenceBackend& backend, const ModelRef& model,
                             std::span<const ProblemSpec> problems, int round,
                             std::vector<SolutionRecord>* samples = nullptr);

}  // namespace stages

}  // namespace tpt
