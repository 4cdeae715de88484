#include "tpt/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tpt/chat_client.hpp"
#include "tpt/dataset_io.hpp"
#include "tpt/digest.hpp"
#include "tpt/error.hpp"
#include "tpt/keyed_rng.hpp"
#include "tpt/process.hpp"
#include "tpt/pruner.hpp"
#include "tpt/simbackend.hpp"

namespace tpt {
namespace fs = std::filesystem;
using nlohmann::json;

std::unique_ptr<generator::InferenceBackend> make_backend(const ModelRef& model, const fs::path& base_dir,
                                                          const generator::EndpointOptions& endpoint) {
    validate_model_ref(model, base_dir);
    if (model.kind == ModelKind::Simulated) {
        return std::make_unique<sim::SimBackend>(sim::load_state(resolve_state_path(model, base_dir)));
    }
    return std::make_unique<generator::ChatEndpointBackend>(model.uri, endpoint);
}

namespace stages {

std::vector<ProblemSpec> train_problems(const std::vector<ProblemSpec>& all) {
    std::vector<ProblemSpec> out;
    for (const auto& p : all) {
        if (p.split == Split::Train) out.push_back(p);
    }
    return out;
}

std::vector<ProblemSpec> eval_problems(const std::vector<ProblemSpec>& all, const EvalConfig& eval) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].split == eval.split) idx.push_back(i);
    }
    if (eval.subset_seed && idx.size() > static_cast<std::size_t>(eval.subset_size)) {
        std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
        for (auto i : idx) keyed.emplace_back(hash_key({*eval.subset_seed, "eval-subset", all[i].id}), i);
        std::sort(keyed.begin(), keyed.end());
        keyed.resize(static_cast<std::size_t>(eval.subset_size));
        idx.clear();
        for (const auto& [key, i] : keyed) idx.push_back(i);
        std::sort(idx.begin(), idx.end());
    }
    if (idx.size() > static_cast<std::size_t>(eval.subset_size)) idx.resize(static_cast<std::size_t>(eval.subset_size));
    std::vector<ProblemSpec> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

namespace {

generator::RetryPolicy retry_policy(const RunConfig& config) {
    generator::RetryPolicy r;
    r.max_attempts = config.generation.max_attempts;
    r.backoff_base_ms = config.generation.backoff_base_ms;
    return r;
}

}  // namespace

generator::GenerationResult generate(const RunConfig& config, generator::InferenceBackend& backend, const ModelRef& model,
                                     std::span<const ProblemSpec> problems, int round) {
    generator::GenerationOptions opts;
    opts.round = round;
    opts.purpose = "generate";
    opts.max_in_flight = config.generation.max_in_flight;
    opts.retry = retry_policy(config);
    auto params = config.generation.sampling;
    params.seed = config.seed;
    return generator::sample_solutions(backend, model, problems, params, generator::PromptTemplate::for_kind(config.kind),
                                       opts);
}

void judge(const RunConfig& config, std::vector<SolutionRecord>& records, std::span<const ProblemSpec> problems) {
    pruner::VerifyOptions opts;
    opts.marker = generator::PromptTemplate::for_kind(config.kind).answer_format_marker;
    opts.normalization = config.prune.normalization;
    opts.runner = config.judge;
    opts.threads = config.verify_threads;
    pruner::assign_verdicts(records, pruner::index_problems(problems), opts);
}

std::vector<SolutionRecord> prune(const RunConfig& config, std::span<const SolutionRecord> judged) {
    return pruner::apply_strategy(judged, config.prune);
}

curator::CuratedDataset curate(const RunConfig& config, std::span<const SolutionRecord> pruned,
                               std::span<const ProblemSpec> problems, int round,
                               std::span<const curator::TrainingPair> previous) {
    const auto tmpl = generator::PromptTemplate::for_kind(config.kind);
    std::unordered_map<std::string, const ProblemSpec*> by_id;
    for (const auto& p : problems) by_id.emplace(p.id, &p);
    auto prompt_for = [&](const std::string& id) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError(fmt::format("record for unknown problem '{}'", id));
        return generator::render_prompt(tmpl, *it->second);
    };

    const auto unique = curator::dedupe(pruned);
    curator::CuratedDataset ds;
    if (config.curation.accumulate && !previous.empty()) {
        std::vector<curator::TrainingPair> pool(previous.begin(), previous.end());
        for (const auto& r : unique) {
            pool.push_back(curator::TrainingPair{r.problem_id, prompt_for(r.problem_id), r.text, r.round,
                                                 curator::PairOrigin::Synthetic});
        }
        ds = curator::sample_pairs(pool, config.curation, round);
    } else {
        ds = curator::sample_dataset(unique, config.curation, round, prompt_for);
    }
    if (config.curation.mix && config.curation.mix->real_fraction > 0.0) {
        const auto real = curator::read_pairs(config.curation.mix->real_source);
        ds = curator::mix_real(ds, *config.curation.mix, real);
    }
    return ds;
}

evalkit::EvalReport evaluate(const RunConfig& config, generator::InferenceBackend& backend, const ModelRef& model,
                             std::span<const ProblemSpec> problems, int round, std::vector<SolutionRecord>* samples) {
    generator::GenerationOptions opts;
    opts.round = round;
    opts.purpose = "evaluate";
    opts.max_in_flight = config.generation.max_in_flight;
    opts.retry = retry_policy(config);
    generator::SamplingParams params;
    params.temperature = config.eval.temperature;
    params.k = config.eval.n_samples;
    params.max_tokens = config.generation.sampling.max_tokens;
    params.seed = config.seed;
    auto gen = generator::sample_solutions(backend, model, problems, params,
                                           generator::PromptTemplate::for_kind(config.kind), opts);
    judge(config, gen.records, problems);

    std::vector<std::string> ids;
    ids.reserve(problems.size());
    for (const auto& p : problems) ids.push_back(p.id);
    auto report = evalkit::evaluate_records(gen.records, ids, config.eval.k_list, model.name);
    if (problems.size() < static_cast<std::size_t>(config.eval.subset_size)) {
        report.notes.push_back(fmt::format("eval subset has {} problems (requested {})", problems.size(),
                                           config.eval.subset_size));
    }
    if (!gen.failures.empty()) {
        report.notes.push_back(fmt::format("{} eval samples failed after retries", gen.failures.size()));
    }
    if (samples) *samples = std::move(gen.records);
    return report;
}

}  // namespace stages

namespace {

fs::path absolute_normal(const fs::path& p) { return fs::absolute(p).lexically_normal(); }

// Re-expresses a simulated model's state path relative to another directory.
ModelRef rebase(ModelRef model, const fs::path& from_dir, const fs::path& to_dir) {
    if (model.kind != ModelKind::Simulated) return model;
    const fs::path uri(model.uri);
    const auto abs = uri.is_absolute() ? uri.lexically_normal() : absolute_normal(from_dir / uri);
    model.uri = abs.lexically_relative(absolute_normal(to_dir)).generic_string();
    return model;
}

json stored_snapshot(const json& stored) {
    auto s = stored;
    s.erase("run_id");
    s.erase("runs_root");
    return s;
}

void check_hook(const RunConfig& config) {
    if (!find_executable(config.trainer.hook.front())) {
        throw ConfigError(fmt::format("trainer hook '{}' not found or not executable", config.trainer.hook.front()));
    }
}

// Base model as used inside the run: simulated state is snapshotted under models/.
ModelRef base_model_in_run(const RunConfig& config, const RunDir& dir, bool create) {
    auto ref = config.base_model;
    if (ref.kind != ModelKind::Simulated) return ref;
    const auto rel = fs::path("models") / (ref.name + ".state.json");
    const auto target = dir.path() / rel;
    if (create && !fs::exists(target)) {
        validate_model_ref(ref, {});
        const auto state = sim::load_state(resolve_state_path(ref, {}));
        save_state(state, target);
    }
    ref.uri = rel.generic_string();
    return ref;
}

void verify_round(const RunDir& dir, const RoundManifest& m) {
    for (const auto& [name, expected] : m.artifact_digests) {
        const auto path = dir.artifact(m.round, name);
        if (!fs::exists(path)) throw IntegrityError(path, "artifact listed in the manifest is missing");
        const auto actual = digest_file(path);
        if (actual != expected) {
            throw IntegrityError(path, fmt::format("digest mismatch: manifest has {}, file has {}", expected, actual));
        }
    }
    const auto dataset = dir.artifact(m.round, artifacts::kDataset);
    if (digest_file(dataset) != m.dataset_digest) throw IntegrityError(dataset, "dataset digest does not match manifest");
}

class RoundDriver {
public:
    RoundDriver(const RunConfig& config, RunDir dir, RunState state, const RunOptions& options)
        : config_(config), dir_(std::move(dir)), state_(std::move(state)), options_(options) {
        factory_ = options.backend_factory
                       ? options.backend_factory
                       : BackendFactory([ep = config.endpoint](const ModelRef& m, const fs::path& base) {
                             return make_backend(m, base, ep);
                         });
        all_problems_ = load_problems(config.problems_path, config.kind);
        train_ = stages::train_problems(all_problems_);
        eval_ = stages::eval_problems(all_problems_, config.eval);
        if (train_.empty()) throw ConfigError(fmt::format("{} has no train-split problems", config.problems_path.string()));
        if (eval_.empty()) {
            throw ConfigError(fmt::format("{} has no {}-split problems to evaluate on", config.problems_path.string(),
                                          to_string(config.eval.split)));
        }
    }

    RunState run() {
        std::error_code ec;
        fs::remove(dir_.failure_file(), ec);
        for (int r = static_cast<int>(state_.manifests.size()); r <= config_.rounds; ++r) {
            if (options_.stop_after_round && r > *options_.stop_after_round) break;
            execute_round(r);
        }
        return state_;
    }

private:
    template <typename Fn>
    void stage(int round, const char* name, Fn&& fn) {
        if (options_.on_stage) options_.on_stage(round, name);
        spdlog::info("round {}: {}", round, name);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const std::exception& e) {
            write_json_file(json{{"stage", name}, {"round", round}, {"cause", e.what()}}, dir_.failure_file());
            throw StageError(name, round, e.what());
        }
        timing_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest_.stage_order.emplace_back(name);
    }

    void execute_round(int r) {
        const auto round_dir = dir_.round_dir(r);
        fs::remove_all(round_dir);
        fs::create_directories(round_dir);
        manifest_ = RoundManifest{};
        timing_ = json::object();
        manifest_.round = r;
        manifest_.input_model = state_.current_model;
        manifest_.config_snapshot = config_snapshot(config_);

        ModelRef model = state_.current_model;
        std::string job_digest;
        if (r >= 1) stage(r, "train", [&] { model = train(r, job_digest); });

        generator::GenerationResult gen;
        stage(r, "generate", [&] {
            auto backend = factory_(model, dir_.path());
            gen = stages::generate(config_, *backend, model, train_, r);
            write_records(gen.records, dir_.artifact(r, artifacts::kGenerations));
            manifest_.counts.generated = static_cast<std::int64_t>(gen.records.size());
            manifest_.generation_failures = gen.failures;
        });

        std::vector<SolutionRecord> pruned;
        stage(r, "prune", [&] {
            stages::judge(config_, gen.records, train_);
            write_records(gen.records, dir_.artifact(r, artifacts::kJudged));
            pruned = stages::prune(config_, gen.records);
            write_records(pruned, dir_.artifact(r, artifacts::kPruned));
            manifest_.counts.pruned_kept = static_cast<std::int64_t>(pruned.size());
        });

        stage(r, "curate", [&] {
            std::vector<curator::TrainingPair> previous;
            if (config_.curation.accumulate && r >= 1) previous = curator::read_pairs(dir_.artifact(r - 1, artifacts::kDataset));
            auto ds = stages::curate(config_, pruned, train_, r, previous);
            write_dataset(ds, dir_.artifact(r, artifacts::kDataset));
            manifest_.counts.curated = static_cast<std::int64_t>(ds.pairs.size());
            manifest_.dataset_digest = ds.digest;
            manifest_.curation_shortfall = ds.shortfall_note;
        });

        evalkit::EvalReport report;
        stage(r, "evaluate", [&] {
            auto backend = factory_(model, dir_.path());
            std::vector<SolutionRecord> samples;
            report = stages::evaluate(config_, *backend, model, eval_, r, &samples);
            write_records(samples, dir_.artifact(r, artifacts::kEvalSamples));
            write_json_file(json(report), dir_.artifact(r, artifacts::kEval));
        });

        if (r >= 1) {
            manifest_.output_model = model;
            manifest_.job_digest = job_digest;
        }
        for (const char* name : {artifacts::kGenerations, artifacts::kJudged, artifacts::kPruned, artifacts::kDataset,
                                 artifacts::kEval, artifacts::kEvalSamples}) {
            manifest_.artifact_digests[name] = digest_file(dir_.artifact(r, name));
        }
        if (r >= 1) {
            for (const char* name : {artifacts::kTrainSpec, artifacts::kTrainModelRef}) {
                manifest_.artifact_digests[name] = digest_file(dir_.artifact(r, name));
            }
            if (model.kind == ModelKind::Simulated) {
                const auto rel = fs::path(model.uri).lexically_normal().lexically_relative(fs::path("round-" + std::to_string(r)));
                if (!rel.empty() && *rel.begin() != "..") manifest_.artifact_digests[rel.generic_string()] =
                    digest_file(dir_.path() / model.uri);
            }
        }
        validate_manifest(manifest_);
        write_json_file(json(timing_), dir_.artifact(r, artifacts::kTiming));
        write_json_file(json(manifest_), dir_.manifest(r));

        state_.manifests.push_back(manifest_);
        state_.eval_reports.push_back(std::move(report));
        state_.bootstrapped = true;
        state_.current_model = model;
        state_.completed_rounds = static_cast<int>(state_.registry.entries().size());
        write_json_file(json(state_.registry), dir_.registry_file());
    }

    ModelRef train(int r, std::string& job_digest) {
        const auto tdir = dir_.train_dir(r);
        fs::create_directories(tdir);
        const auto dataset_file = dir_.artifact(r - 1, artifacts::kDataset);
        curator::CuratedDataset ds;
        ds.pairs = curator::read_pairs(dataset_file);
        ds.digest = digest_file(dataset_file);
        ds.source_round = r - 1;
        if (ds.digest != state_.manifests.at(static_cast<std::size_t>(r - 1)).dataset_digest) {
            throw IntegrityError(dataset_file, "dataset changed since its round completed");
        }

        const auto& parent = state_.current_model;
        const auto input = rebase(parent, dir_.path(), tdir);
        const auto dataset_rel = absolute_normal(dataset_file).lexically_relative(absolute_normal(tdir)).generic_string();
        const auto spec = trainhook::build_job_spec(input, ds, dataset_rel, r, config_.trainer.overrides);
        const auto spec_path = dir_.artifact(r, artifacts::kTrainSpec);
        auto result = trainhook::invoke_trainer(spec, spec_path, config_.trainer.hook);
        if (result.status != trainhook::TrainerStatus::Succeeded) {
            throw Error(fmt::format("trainer exited with code {}; log at {}", result.exit_code, result.log_path.string()));
        }
        auto produced = rebase(*result.output_model, tdir, dir_.path());
        validate_model_ref(produced, dir_.path());
        result.output_model = produced;
        job_digest = digest_file(spec_path);
        state_.registry = trainhook::register_model(state_.registry, r, result, parent, job_digest);
        return produced;
    }

    const RunConfig& config_;
    RunDir dir_;
    RunState state_;
    const RunOptions& options_;
    BackendFactory factory_;
    std::vector<ProblemSpec> all_problems_;
    std::vector<ProblemSpec> train_;
    std::vector<ProblemSpec> eval_;
    RoundManifest manifest_;
    json timing_;
};

}  // namespace

RunConfig load_stored_config(const RunDir& dir) {
    if (!fs::exists(dir.config_file())) {
        throw ConfigError(fmt::format("{} is not a run directory (no config.json)", dir.path().string()));
    }
    return run_config_from_json(read_json_file(dir.config_file()), {});
}

RunState load_run_state(const RunDir& dir, const RunConfig& config) {
    RunState state;
    state.current_model = base_model_in_run(config, dir, false);
    for (int r = 0; r <= config.rounds; ++r) {
        const auto mpath = dir.manifest(r);
        if (!fs::exists(mpath)) break;
        RoundManifest m;
        try {
            m = read_json_file(mpath).get<RoundManifest>();
            validate_manifest(m);
        } catch (const json::exception& e) {
            throw IntegrityError(mpath, fmt::format("unreadable manifest: {}", e.what()));
        } catch (const ValidationError& e) {
            throw IntegrityError(mpath, e.what());
        }
        if (m.round != r) throw IntegrityError(mpath, fmt::format("manifest claims round {}", m.round));
        if (!(m.input_model == state.current_model)) {
            throw IntegrityError(mpath, "input model does not continue the model chain");
        }
        verify_round(dir, m);
        if (r >= 1) {
            if (!m.output_model || !m.job_digest) throw IntegrityError(mpath, "training round without output model");
            try {
                state.registry.append(trainhook::RegistryEntry{r, *m.output_model, m.input_model, *m.job_digest});
            } catch (const ValidationError& e) {
                throw IntegrityError(mpath, e.what());
            }
            state.current_model = *m.output_model;
        }
        const auto eval_path = dir.artifact(r, artifacts::kEval);
        state.eval_reports.push_back(read_json_file(eval_path).get<evalkit::EvalReport>());
        state.manifests.push_back(std::move(m));
    }
    state.bootstrapped = !state.manifests.empty();
    state.completed_rounds = static_cast<int>(state.registry.entries().size());
    return state;
}

RunState run_tpt(const RunConfig& config, const RunOptions& options) {
    config.validate();
    check_hook(config);
    RunDir dir(config.runs_root, config.run_id);
    if (fs::exists(dir.config_file())) {
        const auto stored = read_json_file(dir.config_file());
        if (stored_snapshot(stored) != config_snapshot(config)) {
            throw ConfigError(fmt::format("{} already holds a run with a different config", dir.path().string()));
        }
    } else {
        fs::create_directories(dir.path());
        write_json_file(run_config_to_json(config), dir.config_file());
    }
    base_model_in_run(config, dir, true);
    auto state = load_run_state(dir, config);
    return RoundDriver(config, dir, std::move(state), options).run();
}

RunState resume(const fs::path& runs_root, const std::string& run_id, const RunOptions& options) {
    RunDir dir(runs_root, run_id);
    auto config = load_stored_config(dir);
    config.runs_root = runs_root;
    check_hook(config);
    auto state = load_run_state(dir, config);
    if (static_cast<int>(state.manifests.size()) > config.rounds) return state;
    base_model_in_run(config, dir, true);
    return RoundDriver(config, dir, std::move(state), options).run();
}

}  // namespace tpt
