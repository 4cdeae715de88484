#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tpt::gradlab {

using ContextId = int;

// Tabular softmax policy: one logit row per context.
class TabularPolicy {
public:
    TabularPolicy(int vocab_size, std::map<ContextId, std::vector<double>> logits);

    // Every context in `contexts` gets an all-zero (uniform) row.
    static TabularPolicy uniform(int vocab_size, std::span<const ContextId> contexts);
    static TabularPolicy random(int vocab_size, int n_contexts, std::mt19937_64& rng, double scale = 2.0);

    int vocab_size() const noexcept { return vocab_size_; }
    const std::map<ContextId, std::vector<double>>& logits() const noexcept { return logits_; }
    std::vector<double>& row(ContextId ctx);

    // Numerically stable softmax of the row; throws std::out_of_range for
    // an unknown context.
    std::vector<double> probs(ContextId ctx) const;

private:
    int vocab_size_;
    std::map<ContextId, std::vector<double>> logits_;
};

struct Step {
    ContextId context = 0;
    int token = 0;

    bool operator==(const Step&) const = default;
};

struct Trajectory {
    std::vector<Step> steps;
    double reward = 1.0;
};

// Sparse, same shape as the policy logits; only visited contexts have rows.
using GradTable = std::map<ContextId, std::vector<double>>;

// log pi(traj) = sum over steps of log softmax(logits[ctx])[token].
double log_prob(const TabularPolicy& policy, const Trajectory& traj);

// Sum over steps of onehot(token) - softmax(logits[ctx]).
GradTable grad_logprob(const TabularPolicy& policy, const Trajectory& traj);

// Sum over trajectories of reward * grad_logprob. Rewards must be -1 or +1.
GradTable pg_gradient(const TabularPolicy& policy, std::span<const Trajectory> trajectories);

// Ascent direction of the SFT objective sum log pi over positives (the
// negative of the cross-entropy loss gradient).
GradTable sft_gradient(const TabularPolicy& policy, std::span<const Trajectory> positives);

// || pg(x_w=+1, x_l=-1) - 2 * sum_{differing steps} grad-step(x_w) ||_F,
// restricted to contexts visited at differing steps. The pair must have equal
// length and share the context at every differing step.
double assumption_residual(const TabularPolicy& policy, const Trajectory& winner, const Trajectory& loser);

struct FiniteDiffReport {
    double max_abs_error = 0.0;
    // Relative to max(|analytic|, |numeric|); entries where both are below
    // 1e-10 contribute to the absolute error only.
    double max_rel_error = 0.0;
    int entries = 0;
};

FiniteDiffReport finite_diff_check(const TabularPolicy& policy, const Trajectory& traj, double epsilon);

GradTable add(const GradTable& a, const GradTable& b);
GradTable scale(const GradTable& a, double s);
double max_abs_diff(const GradTable& a, const GradTable& b);
double frobenius(const GradTable& a);

Trajectory random_trajectory(const TabularPolicy& policy, int length, std::mt19937_64& rng, double reward = 1.0);

struct LabReport {
    int identity_seeds = 0;
    double identity_max_diff = 0.0;
    double row_sum_max = 0.0;
    double linearity_max_diff = 0.0;
    double fd_max_rel_error = 0.0;
    double fd_zero_case_abs_error = 0.0;
    double residual_binary_uniform = 0.0;
    double residual_vocab3_uniform = 0.0;
    // vocab size -> (mean, max) residual over random policies.
    std::map<int, std::pair<double, double>> residual_sweep;
};

// Runs the identity check, finite differences and the residual sweep
// (vocab sizes 2..8) over `seeds` random policies.
LabReport run_lab(int seeds, std::uint64_t base_seed = 20250101);
std::string render_lab_report(const LabReport& report);

}  // namespace tpt::gradlab
