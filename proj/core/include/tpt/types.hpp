#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tpt {

enum class TaskKind { Math, Code };
enum class Split { Train, Test };

struct TestLimits {
    int wall_ms = 2000;
    std::int64_t output_cap_bytes = 1 << 20;

    bool operator==(const TestLimits&) const = default;
};

struct TestCase {
    std::string stdin_data;
    std::string expected_stdout;
    TestLimits limits;

    bool operator==(const TestCase&) const = default;
};

struct FinalAnswer {
    std::string value;
    bool operator==(const FinalAnswer&) const = default;
};

struct TestSuite {
    std::vector<TestCase> cases;
    bool operator==(const TestSuite&) const = default;
};

using GroundTruth = std::variant<FinalAnswer, TestSuite>;

struct ProblemSpec {
    std::string id;
    std::string prompt_body;
    GroundTruth ground_truth;
    Split split = Split::Train;

    TaskKind kind() const noexcept {
        return std::holds_alternative<FinalAnswer>(ground_truth) ? TaskKind::Math : TaskKind::Code;
    }
    // Precondition: kind() matches.
    const std::string& final_answer() const { return std::get<FinalAnswer>(ground_truth).value; }
    const std::vector<TestCase>& test_cases() const { return std::get<TestSuite>(ground_truth).cases; }

    bool operator==(const ProblemSpec&) const = default;
};

enum class Verdict { Correct, SoftCorrect, Incorrect, Unparseable, Error };

struct ExtractedAnswer {
    std::string raw_tail;
    std::string normalized;
    int marker_count = 0;

    bool operator==(const ExtractedAnswer&) const = default;
};

enum class ExecStatus { Pass, WrongOutput, Timeout, RuntimeError, OutputOverflow };

struct ExecOutcome {
    int test_index = 0;
    ExecStatus status = ExecStatus::Pass;
    std::int64_t wall_ms_used = 0;

    bool operator==(const ExecOutcome&) const = default;
};

struct SamplingInfo {
    double temperature = 0.0;
    std::int64_t seed = 0;

    bool operator==(const SamplingInfo&) const = default;
};

struct SolutionRecord {
    std::string problem_id;
    std::string model_ref;
    int round = 0;
    int sample_index = 0;
    std::string text;
    SamplingInfo sampling;
    // Generation hit max_tokens; such records are judged Unparseable.
    bool truncated = false;
    std::optional<ExtractedAnswer> extracted;
    std::optional<std::vector<ExecOutcome>> exec;
    std::optional<Verdict> verdict;

    bool operator==(const SolutionRecord&) const = default;
};

enum class ModelKind { Endpoint, Simulated };
enum class ModelFamily { GemmaLike, LlamaLike, Other };

struct ModelRef {
    std::string name;
    ModelKind kind = ModelKind::Simulated;
    ModelFamily family = ModelFamily::Other;
    // Endpoint base address, or path to a simulated-state file. Relative
    // state paths are resolved against a caller-supplied base directory.
    std::string uri;

    bool operator==(const ModelRef&) const = default;
};

// Throws ValidationError if the reference cannot be used: endpoints need an
// address, simulated models need a readable state file.
void validate_model_ref(const ModelRef& ref, const std::filesystem::path& base_dir);
std::filesystem::path resolve_state_path(const ModelRef& ref, const std::filesystem::path& base_dir);

struct RoundCounts {
    std::int64_t generated = 0;
    std::int64_t pruned_kept = 0;
    std::int64_t curated = 0;

    bool operator==(const RoundCounts&) const = default;
};

struct GenerationFailure {
    std::string problem_id;
    int sample_index = 0;
    int attempts = 0;
    std::string message;

    bool operator==(const GenerationFailure&) const = default;
};

// Immutable record of one completed round. Every field is a pure function
// of (config, seed, inputs) so identical runs produce identical manifests;
// wall-clock timing lives in a sidecar file.
struct RoundManifest {
    int round = 0;
    ModelRef input_model;
    std::optional<ModelRef> output_model;
    RoundCounts counts;
    std::string dataset_digest;
    nlohmann::json config_snapshot;
    // Stage name per logical step, in execution order.
    std::vector<std::string> stage_order;
    // Artifact file name (relative to the round dir) -> sha256.
    std::map<std::string, std::string> artifact_digests;
    std::optional<std::string> job_digest;
    std::vector<GenerationFailure> generation_failures;
    std::optional<std::string> curation_shortfall;

    bool operator==(const RoundManifest&) const = default;
};

// Throws ValidationError on negative counts or pruned_kept > generated.
void validate_manifest(const RoundManifest& m);

std::string_view to_string(TaskKind v);
std::string_view to_string(Split v);
std::string_view to_string(Verdict v);
std::string_view to_string(ExecStatus v);
std::string_view to_string(ModelKind v);
std::string_view to_string(ModelFamily v);

TaskKind task_kind_from_string(std::string_view s);
Split split_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);
ExecStatus exec_status_from_string(std::string_view s);
ModelKind model_kind_from_string(std::string_view s);
ModelFamily model_family_from_string(std::string_view s);

void to_json(nlohmann::json& j, const TestCase& v);
void from_json(const nlohmann::json& j, TestCase& v);
void to_json(nlohmann::json& j, const ProblemSpec& v);
void from_json(const nlohmann::json& j, ProblemSpec& v);
void to_json(nlohmann::json& j, const ExtractedAnswer& v);
void from_json(const nlohmann::json& j, ExtractedAnswer& v);
void to_json(nlohmann::json& j, const ExecOutcome& v);
void from_json(const nlohmann::json& j, ExecOutcome& v);
void to_json(nlohmann::json& j, const SolutionRecord& v);
void from_json(const nlohmann::json& j, SolutionRecord& v);
void to_json(nlohmann::json& j, const ModelRef& v);
void from_json(const nlohmann::json& j, ModelRef& v);
void to_json(nlohmann::json& j, const GenerationFailure& v);
void from_json(const nlohmann::json& j, GenerationFailure& v);
void to_json(nlohmann::json& j, const RoundManifest& v);
void from_json(const nlohmann::json& j, RoundManifest& v);

}  // namespace tpt
