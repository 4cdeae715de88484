#pragma once

#include <filesystem>
#include <string>

namespace tpt {

// On-disk layout of one run:
//   <root>/<id>/config.json
//   <root>/<id>/models/            snapshot of the base model state
//   <root>/<id>/failure.json       present only after a failed stage
//   <root>/<id>/round-<i>/{generations,judged,pruned,dataset}.jsonl
//   <root>/<id>/round-<i>/{eval.json,eval_samples.jsonl,timing.json}
//   <root>/<id>/round-<i>/train/{spec.json,model_ref.out,train.log}
//   <root>/<id>/round-<i>/manifest.json  written last; marks the round complete
class RunDir {
public:
    RunDir(std::filesystem::path runs_root, const std::string& run_id) : root_(std::move(runs_root) / run_id) {}
    explicit RunDir(std::filesystem::path run_path) : root_(std::move(run_path)) {}

    const std::filesystem::path& path() const noexcept { return root_; }
    std::filesystem::path config_file() const { return root_ / "config.json"; }
    std::filesystem::path failure_file() const { return root_ / "failure.json"; }
    std::filesystem::path registry_file() const { return root_ / "registry.json"; }
    std::filesystem::path models_dir() const { return root_ / "models"; }
    std::filesystem::path round_dir(int round) const { return root_ / ("round-" + std::to_string(round)); }
    std::filesystem::path train_dir(int round) const { return round_dir(round) / "train"; }
    std::filesystem::path manifest(int round) const { return round_dir(round) / "manifest.json"; }

    std::filesystem::path artifact(int round, const std::string& name) const { return round_dir(round) / name; }

private:
    std::filesystem::path root_;
};

namespace artifacts {
inline constexpr const char* kGenerations = "generations.jsonl";
inline constexpr const char* kJudged = "judged.jsonl";
inline constexpr const char* kPruned = "pruned.jsonl";
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kEval = "eval.json";
inline constexpr const char* kEvalSamples = "eval_samples.jsonl";
inline constexpr const char* kTiming = "timing.json";
inline constexpr const char* kTrainSpec = "train/spec.json";
inline constexpr const char* kTrainModelRef = "train/model_ref.out";
}  // namespace artifacts

}  // namespace tpt
