#include "tpt/trainhook.hpp"

#include <chrono>
#include <regex>

#include <fmt/format.h>

#include "tpt/dataset_io.hpp"
#include "tpt/error.hpp"
#include "tpt/process.hpp"

namespace tpt::trainhook {
namespace fs = std::filesystem;
using nlohmann::json;

Hyperparameters family_defaults(ModelFamily family) {
    Hyperparameters h;
    switch (family) {
        case ModelFamily::GemmaLike: h.learning_rate = 1e-6; break;
        case ModelFamily::LlamaLike: h.learning_rate = 1e-5; break;
        case ModelFamily::Other: h.learning_rate = 0.0; break;
    }
    return h;
}

std::string default_output_name(const std::string& input_name, int round) {
    static const std::regex suffix(R"(-r[0-9]+$)");
    return fmt::format("{}-r{}", std::regex_replace(input_name, suffix, ""), round);
}

TrainJobSpec build_job_spec(const ModelRef& model, const curator::CuratedDataset& dataset, std::string dataset_path,
                            int round, const Overrides& overrides) {
    if (dataset.digest.empty()) throw ValidationError("dataset digest has not been computed");
    auto hp = family_defaults(model.family);
    if (overrides.learning_rate) {
        hp.learning_rate = *overrides.learning_rate;
    } else if (model.family == ModelFamily::Other) {
        throw ConfigError(fmt::format("model '{}' has no family default learning rate; set one explicitly", model.name));
    }
    if (overrides.epochs) hp.epochs = *overrides.epochs;
    if (overrides.warmup_ratio) hp.warmup_ratio = *overrides.warmup_ratio;
    hp.batch_size = overrides.batch_size;
    hp.max_seq_len = overrides.max_seq_len;
    hp.weight_decay = overrides.weight_decay;
    if (!(hp.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (hp.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(hp.warmup_ratio >= 0.0 && hp.warmup_ratio < 1.0)) throw ConfigError("warmup_ratio must be in [0, 1)");

    TrainJobSpec spec;
    spec.input_model = model;
    spec.dataset_path = std::move(dataset_path);
    spec.dataset_digest = dataset.digest;
    spec.hyperparameters = hp;
    spec.output_name = overrides.output_name.value_or(default_output_name(model.name, round));
    spec.round = round;
    spec.extra = overrides.extra.is_null() ? json::object() : overrides.extra;
    return spec;
}

TrainerResult invoke_trainer(const TrainJobSpec& spec, const fs::path& spec_path, std::span<const std::string> hook) {
    if (hook.empty()) throw ConfigError("trainer hook command is empty");
    if (!find_executable(hook.front())) throw ConfigError(fmt::format("trainer hook '{}' not found", hook.front()));

    const auto dir = spec_path.parent_path();
    fs::create_directories(dir);
    const auto ref_path = dir / kModelRefFile;
    std::error_code ec;
    fs::remove(ref_path, ec);
    write_json_file(json(spec), spec_path);

    TrainerResult result;
    result.log_path = dir / "train.log";
    ProcessSpec ps;
    ps.argv.assign(hook.begin(), hook.end());
    ps.argv.push_back(spec_path.string());
    ps.log_file = result.log_path;
    const auto start = std::chrono::steady_clock::now();
    const auto run = run_process(ps);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!run.launched) throw ConfigError(fmt::format("trainer hook '{}' could not be launched", hook.front()));
    result.exit_code = run.exit_code.value_or(-1);
    if (!run.exited_cleanly()) {
        result.status = TrainerStatus::Failed;
        return result;
    }
    if (!fs::exists(ref_path)) {
        throw ProtocolError(fmt::format("trainer hook exited 0 but wrote no {}", ref_path.string()));
    }
    try {
        result.output_model = read_json_file(ref_path).get<ModelRef>();
    } catch (const std::exception& e) {
        throw ProtocolError(fmt::format("unreadable {}: {}", ref_path.string(), e.what()));
    }
    result.status = TrainerStatus::Succeeded;
    return result;
}

void ModelRegistry::append(RegistryEntry entry) {
    if (entry.round != last_round() + 1) {
        throw ValidationError(fmt::format("registry expects round {}, got {}", last_round() + 1, entry.round));
    }
    if (!entries_.empty() && !(entry.parent == entries_.back().model)) {
        throw ValidationError(fmt::format("round {} parent '{}' is not the previous model '{}'", entry.round,
                                          entry.parent.name, entries_.back().model.name));
    }
    entries_.push_back(std::move(entry));
}

ModelRegistry register_model(ModelRegistry registry, int round, const TrainerResult& result, const ModelRef& parent,
                             std::string job_digest) {
    if (result.status != TrainerStatus::Succeeded || !result.output_model) {
        throw ValidationError(fmt::format("cannot register round {}: trainer did not succeed", round));
    }
    registry.append(RegistryEntry{round, *result.output_model, parent, std::move(job_digest)});
    return registry;
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_get(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

void to_json(json& j, const TrainJobSpec& v) {
    const auto& h = v.hyperparameters;
    j = json{{"input_model", v.input_model},
             {"dataset_path", v.dataset_path},
             {"dataset_digest", v.dataset_digest},
             {"hyperparameters",
              {{"learning_rate", h.learning_rate},
               {"optimizer", h.optimizer},
               {"epochs", h.epochs},
               {"warmup_ratio", h.warmup_ratio},
               {"batch_size", opt(h.batch_size)},
               {"max_seq_len", opt(h.max_seq_len)},
               {"weight_decay", opt(h.weight_decay)}}},
             {"output_name", v.output_name},
             {"round", v.round},
             {"extra", v.extra}};
}

void from_json(const json& j, TrainJobSpec& v) {
    j.at("input_model").get_to(v.input_model);
    j.at("dataset_path").get_to(v.dataset_path);
    j.at("dataset_digest").get_to(v.dataset_digest);
    const auto& h = j.at("hyperparameters");
    h.at("learning_rate").get_to(v.hyperparameters.learning_rate);
    h.at("optimizer").get_to(v.hyperparameters.optimizer);
    h.at("epochs").get_to(v.hyperparameters.epochs);
    h.at("warmup_ratio").get_to(v.hyperparameters.warmup_ratio);
    v.hyperparameters.batch_size = opt_get<int>(h, "batch_size");
    v.hyperparameters.max_seq_len = opt_get<int>(h, "max_seq_len");
    v.hyperparameters.weight_decay = opt_get<double>(h, "weight_decay");
    j.at("output_name").get_to(v.output_name);
    j.at("round").get_to(v.round);
    v.extra = j.value("extra", json::object());
}

void to_json(json& j, const ModelRegistry& v) {
    j = json::array();
    for (const auto& e : v.entries()) {
        j.push_back({{"round", e.round}, {"model", e.model}, {"parent", e.parent}, {"job_digest", e.job_digest}});
    }
}

}  // namespace tpt::trainhook
