#include "tpt/simbackend.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "tpt/dataset_io.hpp"
#include "tpt/digest.hpp"
#include "tpt/error.hpp"
#include "tpt/keyed_rng.hpp"
#include "tpt/pruner.hpp"
#include "tpt/trainhook.hpp"

namespace tpt::sim {
namespace fs = std::filesystem;
using nlohmann::json;

void SimModelState::validate() const {
    for (const auto& [id, s] : per_problem) {
        if (!(s.p >= 0.0 && s.p <= 1.0)) throw ValidationError(fmt::format("problem '{}': p={} outside [0,1]", id, s.p));
        if (s.pool < 1) throw ValidationError(fmt::format("problem '{}': pool={} must be >= 1", id, s.pool));
    }
}

void SimUpdateRule::validate() const {
    if (!(eta_up > 0.0 && eta_up < 1.0)) throw ConfigError(fmt::format("eta_up={} outside (0,1)", eta_up));
    if (!(eta_down >= 0.0 && eta_down < 1.0)) throw ConfigError(fmt::format("eta_down={} outside [0,1)", eta_down));
    if (!(pool_shrink > 0.0 && pool_shrink <= 1.0)) {
        throw ConfigError(fmt::format("pool_shrink={} outside (0,1]", pool_shrink));
    }
}

std::string sim_generate_text(const SimModelState& state, const std::string& problem_id, int sample_index,
                              std::int64_t sample_seed) {
    const auto it = state.per_problem.find(problem_id);
    if (it == state.per_problem.end()) throw ValidationError(fmt::format("simulated model does not know '{}'", problem_id));
    const auto& ps = it->second;
    const KeyedStream stream{state.seed, std::int64_t{state.version}, std::string_view(problem_id),
                             std::int64_t{sample_index}, sample_seed};
    const auto templ = stream.below(1, static_cast<std::uint64_t>(ps.pool));
    if (stream.uniform(0) < ps.p) return fmt::format("reasoning-template-{}\n#### {}", templ, ps.answer);

    auto wrong = std::to_string(stream.below(2, 1'000'000));
    if (wrong == ps.answer) wrong += "1";
    return fmt::format("reasoning-template-{}\n#### {}", templ, wrong);
}

SolutionRecord sim_generate(const SimModelState& state, const ProblemSpec& problem, const SamplingInfo& sampling,
                            int sample_index, const std::string& model_name, int round) {
    SolutionRecord r;
    r.problem_id = problem.id;
    r.model_ref = model_name;
    r.round = round;
    r.sample_index = sample_index;
    r.sampling = sampling;
    r.text = sim_generate_text(state, problem.id, sample_index, sampling.seed);
    return r;
}

SimModelState sim_train(const SimModelState& state, std::span<const curator::TrainingPair> pairs,
                        const SimUpdateRule& rule) {
    rule.validate();
    SimModelState next = state;
    for (const auto& pair : pairs) {
        auto it = next.per_problem.find(pair.problem_id);
        if (it == next.per_problem.end()) {
            throw ValidationError(fmt::format("dataset references unknown problem '{}'", pair.problem_id));
        }
        auto& ps = it->second;
        const auto extracted = pruner::extract_final_answer(pair.completion);
        if (extracted && extracted->normalized == ps.answer) {
            ps.p = ps.p + rule.eta_up * (1.0 - ps.p);
            ps.pool = std::max(1, static_cast<int>(std::lround(static_cast<double>(ps.pool) * rule.pool_shrink)));
        } else {
            ps.p = ps.p * (1.0 - rule.eta_down);
        }
    }
    next.version = state.version + 1;
    return next;
}

double expected_pass1(const SimModelState& state) {
    if (state.per_problem.empty()) throw ValidationError("expected_pass1 of an empty state");
    double sum = 0.0;
    for (const auto& [id, s] : state.per_problem) sum += s.p;
    return sum / static_cast<double>(state.per_problem.size());
}

SimModelState init_state(std::span<const ProblemSpec> problems, double p, int pool, std::int64_t seed, double spread) {
    SimModelState state;
    state.seed = seed;
    for (const auto& prob : problems) {
        if (prob.kind() != TaskKind::Math) {
            throw ValidationError(fmt::format("simulated backend only models math problems ('{}')", prob.id));
        }
        double pi = p;
        if (spread > 0.0) {
            const KeyedStream s{seed, std::string_view("init"), std::string_view(prob.id)};
            pi = std::clamp(p + spread * (2.0 * s.uniform(0) - 1.0), 0.0, 1.0);
        }
        state.per_problem[prob.id] = SimProblemState{pi, pool, prob.final_answer()};
    }
    state.validate();
    return state;
}

std::vector<ProblemSpec> synthetic_problems(int n_train, int n_test, std::int64_t seed) {
    if (n_train < 0 || n_test < 0) throw std::invalid_argument("problem counts must be non-negative");
    std::vector<ProblemSpec> out;
    const int total = n_train + n_test;
    const int width = std::max(4, static_cast<int>(std::to_string(total).size()));
    for (int i = 0; i < total; ++i) {
        const KeyedStream s{seed, std::string_view("synthetic-problem"), std::int64_t{i}};
        const auto a = static_cast<std::int64_t>(s.below(0, 90) + 10);
        const auto b = static_cast<std::int64_t>(s.below(1, 90) + 10);
        const auto c = static_cast<std::int64_t>(s.below(2, 9) + 2);
        ProblemSpec p;
        p.id = fmt::format("sim-{:0{}}", i, width);
        p.prompt_body = fmt::format(
            "A shop packs {} boxes with {} pencils each and then receives {} more boxes of the same size. "
            "How many pencils does the shop have now?",
            a, c, b);
        p.ground_truth = FinalAnswer{std::to_string((a + b) * c)};
        p.split = i < n_train ? Split::Train : Split::Test;
        out.push_back(std::move(p));
    }
    return out;
}

SimModelState load_state(const fs::path& path) {
    auto state = read_json_file(path).get<SimModelState>();
    state.validate();
    return state;
}

void save_state(const SimModelState& state, const fs::path& path) { write_json_file(json(state), path); }

generator::Completion SimBackend::complete(const generator::CompletionRequest& request) {
    try {
        return {sim_generate_text(state_, request.problem_id, request.sample_index, request.seed), false};
    } catch (const ValidationError& e) {
        throw generator::BackendError(e.what());
    }
}

int run_stub_trainer(const fs::path& spec_path, std::ostream& log) {
    trainhook::TrainJobSpec spec;
    SimUpdateRule rule;
    try {
        spec = read_json_file(spec_path).get<trainhook::TrainJobSpec>();
        if (auto it = spec.extra.find("simulator"); it != spec.extra.end()) rule = it->get<SimUpdateRule>();
        rule.validate();
    } catch (const std::exception& e) {
        log << "stub trainer: unusable spec " << spec_path.string() << ": " << e.what() << "\n";
        return 2;
    }
    const auto dir = spec_path.parent_path();
    try {
        if (spec.input_model.kind != ModelKind::Simulated) {
            throw ValidationError("stub trainer only handles simulated models");
        }
        const fs::path dataset_path = fs::path(spec.dataset_path).is_absolute() ? fs::path(spec.dataset_path)
                                                                                 : dir / spec.dataset_path;
        const auto digest = digest_file(dataset_path);
        if (digest != spec.dataset_digest) {
            throw IntegrityError(dataset_path, fmt::format("digest {} != spec {}", digest, spec.dataset_digest));
        }
        const auto state = load_state(resolve_state_path(spec.input_model, dir));
        const auto pairs = curator::read_pairs(dataset_path);
        const auto trained = sim_train(state, pairs, rule);

        const auto state_file = spec.output_name + ".state.json";
        save_state(trained, dir / state_file);
        ModelRef out{spec.output_name, ModelKind::Simulated, spec.input_model.family, state_file};
        write_json_file(json(out), dir / trainhook::kModelRefFile);
        log << fmt::format("stub trainer: {} -> {} on {} pairs (lr={}, epochs={}, warmup={}), expected pass@1 {:.6f}\n",
                           spec.input_model.name, spec.output_name, pairs.size(), spec.hyperparameters.learning_rate,
                           spec.hyperparameters.epochs, spec.hyperparameters.warmup_ratio, expected_pass1(trained));
        return 0;
    } catch (const std::exception& e) {
        log << "stub trainer: training failed: " << e.what() << "\n";
        return 1;
    }
}

void to_json(json& j, const SimModelState& v) {
    json problems = json::object();
    for (const auto& [id, s] : v.per_problem) problems[id] = {{"p", s.p}, {"pool", s.pool}, {"answer", s.answer}};
    j = json{{"seed", v.seed}, {"version", v.version}, {"per_problem", problems}};
}

void from_json(const json& j, SimModelState& v) {
    j.at("seed").get_to(v.seed);
    j.at("version").get_to(v.version);
    v.per_problem.clear();
    for (const auto& [id, s] : j.at("per_problem").items()) {
        v.per_problem[id] = SimProblemState{s.at("p").get<double>(), s.at("pool").get<int>(),
                                            s.at("answer").get<std::string>()};
    }
}

void to_json(json& j, const SimUpdateRule& v) {
    j = json{{"eta_up", v.eta_up}, {"eta_down", v.eta_down}, {"pool_shrink", v.pool_shrink}};
}

void from_json(const json& j, SimUpdateRule& v) {
    v.eta_up = j.value("eta_up", v.eta_up);
    v.eta_down = j.value("eta_down", v.eta_down);
    v.pool_shrink = j.value("pool_shrink", v.pool_shrink);
}

}  // namespace tpt::sim
