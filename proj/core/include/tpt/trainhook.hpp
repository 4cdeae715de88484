#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpt/curator.hpp"
#include "tpt/types.hpp"

namespace tpt::trainhook {

// File the hook must write next to the job spec file on success.
inline constexpr const char* kModelRefFile = "model_ref.out";

struct Hyperparameters {
    double learning_rate = 0.0;
    std::string optimizer = "adamw-default-decay";
    int epochs = 1;
    double warmup_ratio = 0.1;
    // Not fixed by the recipe; passed through to the trainer untouched.
    std::optional<int> batch_size;
    std::optional<int> max_seq_len;
    std::optional<double> weight_decay;

    bool operator==(const Hyperparameters&) const = default;
};

struct Overrides {
    std::optional<double> learning_rate;
    std::optional<int> epochs;
    std::optional<double> warmup_ratio;
    std::optional<int> batch_size;
    std::optional<int> max_seq_len;
    std::optional<double> weight_decay;
    std::optional<std::string> output_name;
    // Free-form trainer-specific settings copied into the job spec (e.g. the
    // simulated trainer's update rule under "simulator").
    nlohmann::json extra = nlohmann::json::object();
};

struct TrainJobSpec {
    ModelRef input_model;
    // Relative paths are resolved against the directory holding the job spec file.
    std::string dataset_path;
    std::string dataset_digest;
    Hyperparameters hyperparameters;
    std::string output_name;
    int round = 1;
    nlohmann::json extra = nlohmann::json::object();

    bool operator==(const TrainJobSpec&) const = default;
};

// gemma-like 1e-6, llama-like 1e-5; one epoch with 10% warmup. A family
// without a default needs an explicit learning rate (ConfigError otherwise).
Hyperparameters family_defaults(ModelFamily family);

TrainJobSpec build_job_spec(const ModelRef& model, const curator::CuratedDataset& dataset, std::string dataset_path,
                            int round, const Overrides& overrides = {});

// "<root>-r<round>", where <root> is the model name without a previous -r<N> suffix.
std::string default_output_name(const std::string& input_name, int round);

enum class TrainerStatus { Succeeded, Failed };

struct TrainerResult {
    TrainerStatus status = TrainerStatus::Failed;
    std::optional<ModelRef> output_model;
    std::filesystem::path log_path;
    double wall_seconds = 0.0;
    int exit_code = -1;
};

// Writes `spec` to `spec_path`, runs `hook... <spec_path>`, and reads
// <spec dir>/model_ref.out on exit 0. Throws ConfigError when the hook binary
// is missing and ProtocolError when it exits 0 without a readable model ref.
TrainerResult invoke_trainer(const TrainJobSpec& spec, const std::filesystem::path& spec_path,
                             std::span<const std::string> hook);

struct RegistryEntry {
    int round = 0;
    ModelRef model;
    ModelRef parent;
    std::string job_digest;

    bool operator==(const RegistryEntry&) const = default;
};

// Append-only chain M0 -> M1 -> ... -> MN.
class ModelRegistry {
public:
    const std::vector<RegistryEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    int last_round() const noexcept { return entries_.empty() ? 0 : entries_.back().round; }

    // Throws ValidationError unless round == last_round() + 1 and parent is
    // the previous entry's model.
    void append(RegistryEntry entry);

    bool operator==(const ModelRegistry&) const = default;

private:
    std::vector<RegistryEntry> entries_;
};

// Throws ValidationError if the trainer did not succeed.
ModelRegistry register_model(ModelRegistry registry, int round, const TrainerResult& result, const ModelRef& parent,
                             std::string job_digest);

void to_json(nlohmann::json& j, const TrainJobSpec& v);
void from_json(const nlohmann::json& j, TrainJobSpec& v);
void to_json(nlohmann::json& j, const ModelRegistry& v);

}  // namespace tpt::trainhook
