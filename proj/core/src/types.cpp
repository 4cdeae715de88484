#include "tpt/types.hpp"

#include <array>
#include <fstream>
#include <utility>

#include <fmt/format.h>

#include "tpt/error.hpp"

namespace tpt {
namespace {

using nlohmann::json;

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<TaskKind, 2> kTaskKinds{{{TaskKind::Math, "math"}, {TaskKind::Code, "code"}}};
constexpr NameTable<Split, 2> kSplits{{{Split::Train, "train"}, {Split::Test, "test"}}};
constexpr NameTable<Verdict, 5> kVerdicts{{{Verdict::Correct, "Correct"},
                                           {Verdict::SoftCorrect, "SoftCorrect"},
                                           {Verdict::Incorrect, "Incorrect"},
                                           {Verdict::Unparseable, "Unparseable"},
                                           {Verdict::Error, "Error"}}};
constexpr NameTable<ExecStatus, 5> kExecStatuses{{{ExecStatus::Pass, "Pass"},
                                                  {ExecStatus::WrongOutput, "WrongOutput"},
                                                  {ExecStatus::Timeout, "Timeout"},
                                                  {ExecStatus::RuntimeError, "RuntimeError"},
                                                  {ExecStatus::OutputOverflow, "OutputOverflow"}}};
constexpr NameTable<ModelKind, 2> kModelKinds{{{ModelKind::Endpoint, "endpoint"}, {ModelKind::Simulated, "simulated"}}};
constexpr NameTable<ModelFamily, 3> kFamilies{
    {{ModelFamily::GemmaLike, "gemma-like"}, {ModelFamily::LlamaLike, "llama-like"}, {ModelFamily::Other, "other"}}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum v) {
    for (const auto& [e, name] : table) {
        if (e == v) return name;
    }
    return "?";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view s, std::string_view what) {
    for (const auto& [e, name] : table) {
        if (name == s) return e;
    }
    throw ValidationError(fmt::format("unknown {} '{}'", what, s));
}

}  // namespace

std::string_view to_string(TaskKind v) { return name_of(kTaskKinds, v); }
std::string_view to_string(Split v) { return name_of(kSplits, v); }
std::string_view to_string(Verdict v) { return name_of(kVerdicts, v); }
std::string_view to_string(ExecStatus v) { return name_of(kExecStatuses, v); }
std::string_view to_string(ModelKind v) { return name_of(kModelKinds, v); }
std::string_view to_string(ModelFamily v) { return name_of(kFamilies, v); }

TaskKind task_kind_from_string(std::string_view s) { return parse_name(kTaskKinds, s, "task kind"); }
Split split_from_string(std::string_view s) { return parse_name(kSplits, s, "split"); }
Verdict verdict_from_string(std::string_view s) { return parse_name(kVerdicts, s, "verdict"); }
ExecStatus exec_status_from_string(std::string_view s) { return parse_name(kExecStatuses, s, "exec status"); }
ModelKind model_kind_from_string(std::string_view s) { return parse_name(kModelKinds, s, "model kind"); }
ModelFamily model_family_from_string(std::string_view s) { return parse_name(kFamilies, s, "model family"); }

std::filesystem::path resolve_state_path(const ModelRef& ref, const std::filesystem::path& base_dir) {
    std::filesystem::path p(ref.uri);
    return p.is_absolute() ? p : base_dir / p;
}

void validate_model_ref(const ModelRef& ref, const std::filesystem::path& base_dir) {
    if (ref.name.empty()) throw ValidationError("model ref has an empty name");
    if (ref.kind == ModelKind::Endpoint) {
        if (ref.uri.empty()) throw ValidationError(fmt::format("endpoint model '{}' has no address", ref.name));
        return;
    }
    if (ref.uri.empty()) throw ValidationError(fmt::format("simulated model '{}' has no state file", ref.name));
    const auto path = resolve_state_path(ref, base_dir);
    std::ifstream probe(path);
    if (!probe) {
        throw ValidationError(fmt::format("simulated model '{}': state file {} is not readable", ref.name, path.string()));
    }
}

void validate_manifest(const RoundManifest& m) {
    const auto& c = m.counts;
    // curated may exceed pruned_kept when earlier rounds or real data feed the dataset.
    if (c.curated < 0 || c.pruned_kept < 0 || c.pruned_kept > c.generated) {
        throw ValidationError(fmt::format("round {} manifest counts out of order: generated={} pruned_kept={} curated={}",
                                          m.round, c.generated, c.pruned_kept, c.curated));
    }
}

void to_json(json& j, const TestCase& v) {
    j = json{{"stdin", v.stdin_data},
             {"expected_stdout", v.expected_stdout},
             {"wall_ms", v.limits.wall_ms},
             {"output_cap_bytes", v.limits.output_cap_bytes}};
}

void from_json(const json& j, TestCase& v) {
    v.stdin_data = j.value("stdin", std::string{});
    v.expected_stdout = j.at("expected_stdout").get<std::string>();
    v.limits.wall_ms = j.value("wall_ms", TestLimits{}.wall_ms);
    v.limits.output_cap_bytes = j.value("output_cap_bytes", TestLimits{}.output_cap_bytes);
    if (v.limits.wall_ms <= 0 || v.limits.output_cap_bytes <= 0) {
        throw ValidationError("test case limits must be positive");
    }
}

void to_json(json& j, const ProblemSpec& v) {
    j = json{{"id", v.id}, {"prompt", v.prompt_body}, {"split", to_string(v.split)}};
    if (v.kind() == TaskKind::Math) {
        j["final_answer"] = v.final_answer();
    } else {
        j["test_cases"] = v.test_cases();
    }
}

void from_json(const json& j, ProblemSpec& v) {
    v.id = j.at("id").get<std::string>();
    if (v.id.empty()) throw ValidationError("problem id is empty");
    if (j.contains("prompt")) {
        v.prompt_body = j.at("prompt").get<std::string>();
    } else {
        v.prompt_body = j.at("prompt_body").get<std::string>();
    }
    const bool has_answer = j.contains("final_answer");
    const bool has_tests = j.contains("test_cases");
    if (has_answer == has_tests) {
        throw ValidationError(
            fmt::format("problem '{}' must carry exactly one of final_answer / test_cases", v.id));
    }
    if (has_answer) {
        v.ground_truth = FinalAnswer{j.at("final_answer").get<std::string>()};
    } else {
        TestSuite suite{j.at("test_cases").get<std::vector<TestCase>>()};
        if (suite.cases.empty()) throw ValidationError(fmt::format("code problem '{}' has no test cases", v.id));
        v.ground_truth = std::move(suite);
    }
    v.split = split_from_string(j.value("split", std::string{"train"}));
}

void to_json(json& j, const ExtractedAnswer& v) {
    j = json{{"raw_tail", v.raw_tail}, {"normalized", v.normalized}, {"marker_count", v.marker_count}};
}

void from_json(const json& j, ExtractedAnswer& v) {
    j.at("raw_tail").get_to(v.raw_tail);
    j.at("normalized").get_to(v.normalized);
    j.at("marker_count").get_to(v.marker_count);
}

void to_json(json& j, const ExecOutcome& v) {
    j = json{{"test_index", v.test_index}, {"status", to_string(v.status)}, {"wall_ms_used", v.wall_ms_used}};
}

void from_json(const json& j, ExecOutcome& v) {
    j.at("test_index").get_to(v.test_index);
    v.status = exec_status_from_string(j.at("status").get<std::string>());
    j.at("wall_ms_used").get_to(v.wall_ms_used);
}

void to_json(json& j, const SolutionRecord& v) {
    j = json{{"problem_id", v.problem_id},
             {"model_ref", v.model_ref},
             {"round", v.round},
             {"sample_index", v.sample_index},
             {"text", v.text},
             {"sampling", {{"temperature", v.sampling.temperature}, {"seed", v.sampling.seed}}},
             {"truncated", v.truncated}};
    j["extracted"] = v.extracted ? json(*v.extracted) : json(nullptr);
    j["exec"] = v.exec ? json(*v.exec) : json(nullptr);
    j["verdict"] = v.verdict ? json(to_string(*v.verdict)) : json(nullptr);
}

void from_json(const json& j, SolutionRecord& v) {
    j.at("problem_id").get_to(v.problem_id);
    j.at("model_ref").get_to(v.model_ref);
    j.at("round").get_to(v.round);
    if (v.round < 0) throw ValidationError("record round must be >= 0");
    v.sample_index = j.value("sample_index", 0);
    j.at("text").get_to(v.text);
    const auto& s = j.at("sampling");
    s.at("temperature").get_to(v.sampling.temperature);
    s.at("seed").get_to(v.sampling.seed);
    v.truncated = j.value("truncated", false);
    v.extracted.reset();
    v.exec.reset();
    v.verdict.reset();
    if (auto it = j.find("extracted"); it != j.end() && !it->is_null()) v.extracted = it->get<ExtractedAnswer>();
    if (auto it = j.find("exec"); it != j.end() && !it->is_null()) v.exec = it->get<std::vector<ExecOutcome>>();
    if (auto it = j.find("verdict"); it != j.end() && !it->is_null()) {
        v.verdict = verdict_from_string(it->get<std::string>());
    }
}

void to_json(json& j, const ModelRef& v) {
    j = json{{"name", v.name}, {"kind", to_string(v.kind)}, {"family", to_string(v.family)}, {"uri", v.uri}};
}

void from_json(const json& j, ModelRef& v) {
    j.at("name").get_to(v.name);
    v.kind = model_kind_from_string(j.at("kind").get<std::string>());
    v.family = model_family_from_string(j.value("family", std::string{"other"}));
    v.uri = j.value("uri", std::string{});
}

void to_json(json& j, const GenerationFailure& v) {
    j = json{{"problem_id", v.problem_id}, {"sample_index", v.sample_index}, {"attempts", v.attempts},
             {"message", v.message}};
}

void from_json(const json& j, GenerationFailure& v) {
    j.at("problem_id").get_to(v.problem_id);
    j.at("sample_index").get_to(v.sample_index);
    j.at("attempts").get_to(v.attempts);
    j.at("message").get_to(v.message);
}

void to_json(json& j, const RoundManifest& v) {
    j = json{{"round", v.round},
             {"input_model", v.input_model},
             {"output_model", v.output_model ? json(*v.output_model) : json(nullptr)},
             {"counts",
              {{"generated", v.counts.generated},
               {"pruned_kept", v.counts.pruned_kept},
               {"curated", v.counts.curated}}},
             {"dataset_digest", v.dataset_digest},
             {"config_snapshot", v.config_snapshot},
             {"stage_order", v.stage_order},
             {"artifact_digests", v.artifact_digests},
             {"job_digest", v.job_digest ? json(*v.job_digest) : json(nullptr)},
             {"generation_failures", v.generation_failures},
             {"curation_shortfall", v.curation_shortfall ? json(*v.curation_shortfall) : json(nullptr)}};
}

void from_json(const json& j, RoundManifest& v) {
    j.at("round").get_to(v.round);
    j.at("input_model").get_to(v.input_model);
    v.output_model.reset();
    if (const auto& o = j.at("output_model"); !o.is_null()) v.output_model = o.get<ModelRef>();
    const auto& c = j.at("counts");
    c.at("generated").get_to(v.counts.generated);
    c.at("pruned_kept").get_to(v.counts.pruned_kept);
    c.at("curated").get_to(v.counts.curated);
    j.at("dataset_digest").get_to(v.dataset_digest);
    v.config_snapshot = j.at("config_snapshot");
    j.at("stage_order").get_to(v.stage_order);
    j.at("artifact_digests").get_to(v.artifact_digests);
    v.job_digest.reset();
    if (const auto& d = j.at("job_digest"); !d.is_null()) v.job_digest = d.get<std::string>();
    j.at("generation_failures").get_to(v.generation_failures);
    v.curation_shortfall.reset();
    if (const auto& s = j.at("curation_shortfall"); !s.is_null()) v.curation_shortfall = s.get<std::string>();
}

}  // namespace tpt
