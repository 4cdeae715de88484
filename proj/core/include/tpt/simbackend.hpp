#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "tpt/curator.hpp"
#include "tpt/generator.hpp"
#include "tpt/types.hpp"

namespace tpt::sim {

struct SimProblemState {
    double p = 0.0;     // probability a sample is correct
    int pool = 1;       // distinct reasoning templates a correct sample draws from
    std::string answer; // ground truth the model "knows"

    bool operator==(const SimProblemState&) const = default;
};

struct SimModelState {
    std::map<std::string, SimProblemState> per_problem;
    std::int64_t seed = 0;
    int version = 0;

    // Throws ValidationError on p outside [0,1] or pool < 1.
    void validate() const;
    bool operator==(const SimModelState&) const = default;
};

struct SimUpdateRule {
    double eta_up = 0.5;
    double eta_down = 0.0;
    double pool_shrink = 0.5;

    void validate() const;
    bool operator==(const SimUpdateRule&) const = default;
};

// Text of one sample. Correct samples are "reasoning-template-<t>\n#### <answer>"
// with t uniform over the pool; a draw is correct with probability p. The
// stream is keyed on (state seed, version, problem id, sample index, sample seed).
std::string sim_generate_text(const SimModelState& state, const std::string& problem_id, int sample_index,
                              std::int64_t sample_seed);

SolutionRecord sim_generate(const SimModelState& state, const ProblemSpec& problem, const SamplingInfo& sampling,
                            int sample_index, const std::string& model_name, int round);

// For each pair in order: a correct completion moves p <- p + eta_up (1 - p)
// and pool <- max(1, round(pool * pool_shrink)); an incorrect one moves
// p <- p (1 - eta_down). Returns version + 1.
SimModelState sim_train(const SimModelState& state, std::span<const curator::TrainingPair> pairs,
                        const SimUpdateRule& rule);

double expected_pass1(const SimModelState& state);

// Every problem at probability p with the given pool size. When spread > 0,
// p is drawn per problem uniformly from [p - spread, p + spread] (clamped).
SimModelState init_state(std::span<const ProblemSpec> problems, double p, int pool, std::int64_t seed,
                         double spread = 0.0);

// Arithmetic word problems "sim-<i>" with integer answers; the first n_train
// are train split, the rest test split.
std::vector<ProblemSpec> synthetic_problems(int n_train, int n_test, std::int64_t seed = 0);

SimModelState load_state(const std::filesystem::path& path);
void save_state(const SimModelState& state, const std::filesystem::path& path);

// InferenceBackend over a fixed state; ignores the prompt text. Unknown
// problems raise BackendError.
class SimBackend final : public generator::InferenceBackend {
public:
    explicit SimBackend(SimModelState state) : state_(std::move(state)) {}
    generator::Completion complete(const generator::CompletionRequest& request) override;
    const SimModelState& state() const noexcept { return state_; }

private:
    SimModelState state_;
};

// Hook-contract implementation used as the default trainer for simulated
// runs. Returns the process exit code: 0 ok, 1 training failure, 2 bad spec.
int run_stub_trainer(const std::filesystem::path& spec_path, std::ostream& log);

void to_json(nlohmann::json& j, const SimModelState& v);
void from_json(const nlohmann::json& j, SimModelState& v);
void to_json(nlohmann::json& j, const SimUpdateRule& v);
void from_json(const nlohmann::json& j, SimUpdateRule& v);

}  // namespace tpt::sim
