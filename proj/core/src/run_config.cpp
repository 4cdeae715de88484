#include "tpt/run_config.hpp"

#include <fmt/format.h>

#include "tpt/dataset_io.hpp"
#include "tpt/error.hpp"

namespace tpt {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal();
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

template <typename T>
void maybe_opt(const json& j, const char* key, std::optional<T>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

void RunConfig::validate() const {
    if (run_id.empty()) throw ConfigError("run_id is empty");
    if (problems_path.empty()) throw ConfigError("problems.path is required");
    if (rounds < 1) throw ConfigError(fmt::format("rounds must be >= 1, got {}", rounds));
    generation.sampling.validate();
    if (generation.max_in_flight < 1) throw ConfigError("generation.max_in_flight must be >= 1");
    if (generation.max_attempts < 1) throw ConfigError("generation.max_attempts must be >= 1");
    if (generation.backoff_base_ms < 0) throw ConfigError("generation.backoff_base_ms must be >= 0");
    if (!(eval.temperature >= 0.0 && eval.temperature <= 2.0)) throw ConfigError("eval.temperature outside [0, 2]");
    if (eval.subset_size < 1) throw ConfigError("eval.subset_size must be >= 1");
    if (eval.n_samples < 1) throw ConfigError("eval.n_samples must be >= 1");
    for (int k : eval.k_list) {
        if (k < 1 || k > eval.n_samples) {
            throw ConfigError(fmt::format("eval.k_list entry {} outside [1, n_samples={}]", k, eval.n_samples));
        }
    }
    curation.validate();
    if (trainer.hook.empty()) throw ConfigError("trainer.hook is empty");
    if (base_model.name.empty()) throw ConfigError("base_model.name is required");
    if (verify_threads < 1) throw ConfigError("verify_threads must be >= 1");
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
    RunConfig c;
    try {
        maybe(doc, "run_id", c.run_id);
        if (auto it = doc.find("runs_root"); it != doc.end()) c.runs_root = resolve(it->get<std::string>(), base_dir);
        maybe(doc, "seed", c.seed);
        maybe(doc, "rounds", c.rounds);
        maybe(doc, "verify_threads", c.verify_threads);

        const auto& problems = doc.at("problems");
        c.problems_path = resolve(problems.at("path").get<std::string>(), base_dir);
        c.kind = task_kind_from_string(problems.value("kind", std::string{"math"}));

        c.base_model = doc.at("base_model").get<ModelRef>();
        if (c.base_model.kind == ModelKind::Simulated) c.base_model.uri = resolve(c.base_model.uri, base_dir).string();

        if (auto g = doc.find("generation"); g != doc.end()) {
            maybe(*g, "temperature", c.generation.sampling.temperature);
            maybe(*g, "k", c.generation.sampling.k);
            maybe(*g, "max_tokens", c.generation.sampling.max_tokens);
            maybe(*g, "max_in_flight", c.generation.max_in_flight);
            maybe(*g, "max_attempts", c.generation.max_attempts);
            maybe(*g, "backoff_base_ms", c.generation.backoff_base_ms);
        }
        c.generation.sampling.seed = c.seed;

        if (auto e = doc.find("eval"); e != doc.end()) {
            maybe(*e, "subset_size", c.eval.subset_size);
            maybe(*e, "k_list", c.eval.k_list);
            maybe(*e, "temperature", c.eval.temperature);
            maybe(*e, "n_samples", c.eval.n_samples);
            if (auto s = e->find("split"); s != e->end()) c.eval.split = split_from_string(s->get<std::string>());
            maybe_opt(*e, "subset_seed", c.eval.subset_seed);
        }

        if (auto p = doc.find("prune"); p != doc.end()) {
            if (auto m = p->find("mode"); m != p->end()) c.prune.mode = pruner::prune_mode_from_string(m->get<std::string>());
            if (auto n = p->find("normalization"); n != p->end()) {
                c.prune.normalization = pruner::normalization_from_string(n->get<std::string>());
            }
        }

        c.curation = curator::CurationPolicy::defaults_for(c.kind);
        c.curation.seed = c.seed;
        if (auto cur = doc.find("curation"); cur != doc.end()) {
            auto patched = json(c.curation);
            patched.update(*cur);
            c.curation = patched.get<curator::CurationPolicy>();
            if (c.curation.mix) c.curation.mix->real_source = resolve(c.curation.mix->real_source, base_dir);
        }

        if (auto t = doc.find("trainer"); t != doc.end()) {
            maybe(*t, "hook", c.trainer.hook);
            auto& o = c.trainer.overrides;
            maybe_opt(*t, "learning_rate", o.learning_rate);
            maybe_opt(*t, "epochs", o.epochs);
            maybe_opt(*t, "warmup_ratio", o.warmup_ratio);
            maybe_opt(*t, "batch_size", o.batch_size);
            maybe_opt(*t, "max_seq_len", o.max_seq_len);
            maybe_opt(*t, "weight_decay", o.weight_decay);
            if (auto x = t->find("extra"); x != t->end() && x->is_object()) o.extra = *x;
        }

        if (auto j = doc.find("judge"); j != doc.end()) {
            maybe(*j, "command", c.judge.command);
            maybe(*j, "file_name", c.judge.file_name);
            maybe(*j, "compile_command", c.judge.compile_command);
            maybe(*j, "compile_wall_ms", c.judge.compile_wall_ms);
            maybe(*j, "exact_bytes", c.judge.exact_bytes);
            maybe(*j, "isolate_network", c.judge.isolate_network);
            maybe_opt(*j, "memory_limit_bytes", c.judge.memory_limit_bytes);
            maybe_opt(*j, "wall_ms", c.judge.wall_ms);
            maybe_opt(*j, "output_cap_bytes", c.judge.output_cap_bytes);
        }

        if (auto ep = doc.find("endpoint"); ep != doc.end()) {
            maybe(*ep, "api_key_env", c.endpoint.api_key_env);
            maybe(*ep, "path", c.endpoint.path);
            maybe(*ep, "connect_timeout_ms", c.endpoint.connect_timeout_ms);
            maybe(*ep, "read_timeout_ms", c.endpoint.read_timeout_ms);
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("invalid config: {}", e.what()));
    } catch (const ValidationError& e) {
        throw ConfigError(fmt::format("invalid config: {}", e.what()));
    }
    c.validate();
    return c;
}

json config_snapshot(const RunConfig& c) {
    const auto& o = c.trainer.overrides;
    return json{
        {"seed", c.seed},
        {"rounds", c.rounds},
        {"verify_threads", c.verify_threads},
        {"problems", {{"path", c.problems_path.string()}, {"kind", to_string(c.kind)}}},
        {"base_model", c.base_model},
        {"generation",
         {{"temperature", c.generation.sampling.temperature},
          {"k", c.generation.sampling.k},
          {"max_tokens", c.generation.sampling.max_tokens},
          {"max_in_flight", c.generation.max_in_flight},
          {"max_attempts", c.generation.max_attempts},
          {"backoff_base_ms", c.generation.backoff_base_ms}}},
        {"eval",
         {{"subset_size", c.eval.subset_size},
          {"k_list", c.eval.k_list},
          {"temperature", c.eval.temperature},
          {"n_samples", c.eval.n_samples},
          {"split", to_string(c.eval.split)},
          {"subset_seed", opt(c.eval.subset_seed)}}},
        {"prune", {{"mode", pruner::to_string(c.prune.mode)}, {"normalization", pruner::to_string(c.prune.normalization)}}},
        {"curation", c.curation},
        {"trainer",
         {{"hook", c.trainer.hook},
          {"learning_rate", opt(o.learning_rate)},
          {"epochs", opt(o.epochs)},
          {"warmup_ratio", opt(o.warmup_ratio)},
          {"batch_size", opt(o.batch_size)},
          {"max_seq_len", opt(o.max_seq_len)},
          {"weight_decay", opt(o.weight_decay)},
          {"extra", o.extra}}},
        {"judge",
         {{"command", c.judge.command},
          {"file_name", c.judge.file_name},
          {"compile_command", c.judge.compile_command},
          {"compile_wall_ms", c.judge.compile_wall_ms},
          {"exact_bytes", c.judge.exact_bytes},
          {"isolate_network", c.judge.isolate_network},
          {"memory_limit_bytes", opt(c.judge.memory_limit_bytes)},
          {"wall_ms", opt(c.judge.wall_ms)},
          {"output_cap_bytes", opt(c.judge.output_cap_bytes)}}},
        {"endpoint",
         {{"api_key_env", c.endpoint.api_key_env},
          {"path", c.endpoint.path},
          {"connect_timeout_ms", c.endpoint.connect_timeout_ms},
          {"read_timeout_ms", c.endpoint.read_timeout_ms}}},
    };
}

json run_config_to_json(const RunConfig& c) {
    auto doc = config_snapshot(c);
    doc["run_id"] = c.run_id;
    doc["runs_root"] = c.runs_root.string();
    return doc;
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError(fmt::format("override '{}' is not key=value", ov));
        const auto key = ov.substr(0, eq);
        const auto raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;
        }
        json* node = &doc;
        std::size_t start = 0;
        for (;;) {
            const auto dot = key.find('.', start);
            const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError(fmt::format("override key '{}' has an empty segment", key));
            if (!node->is_object()) throw ConfigError(fmt::format("override '{}' descends into a non-object", key));
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            node = &(*node)[part];
            if (node->is_null()) *node = json::object();
            start = dot + 1;
        }
    }
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = read_json_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    apply_overrides(doc, overrides);
    return run_config_from_json(doc, fs::absolute(path).parent_path());
}

}  // namespace tpt
