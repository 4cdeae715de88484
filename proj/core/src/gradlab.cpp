#include "tpt/gradlab.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace tpt::gradlab {

TabularPolicy::TabularPolicy(int vocab_size, std::map<ContextId, std::vector<double>> logits)
    : vocab_size_(vocab_size), logits_(std::move(logits)) {
    if (vocab_size_ < 2) throw std::invalid_argument("vocab_size must be >= 2");
    for (const auto& [ctx, row] : logits_) {
        if (static_cast<int>(row.size()) != vocab_size_) {
            throw std::invalid_argument(fmt::format("context {} row has {} entries, expected {}", ctx, row.size(), vocab_size_));
        }
    }
}

TabularPolicy TabularPolicy::uniform(int vocab_size, std::span<const ContextId> contexts) {
    std::map<ContextId, std::vector<double>> logits;
    for (auto c : contexts) logits[c] = std::vector<double>(static_cast<std::size_t>(vocab_size), 0.0);
    return TabularPolicy(vocab_size, std::move(logits));
}

TabularPolicy TabularPolicy::random(int vocab_size, int n_contexts, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    std::map<ContextId, std::vector<double>> logits;
    for (int c = 0; c < n_contexts; ++c) {
        auto& row = logits[c];
        row.resize(static_cast<std::size_t>(vocab_size));
        for (auto& x : row) x = dist(rng);
    }
    return TabularPolicy(vocab_size, std::move(logits));
}

std::vector<double>& TabularPolicy::row(ContextId ctx) { return logits_.at(ctx); }

std::vector<double> TabularPolicy::probs(ContextId ctx) const {
    const auto& row = logits_.at(ctx);
    const double mx = *std::max_element(row.begin(), row.end());
    std::vector<double> p(row.size());
    double z = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) z += p[i] = std::exp(row[i] - mx);
    for (auto& x : p) x /= z;
    return p;
}

namespace {

void check_step(const TabularPolicy& policy, const Step& s) {
    if (!policy.logits().count(s.context)) throw std::out_of_range(fmt::format("unknown context {}", s.context));
    if (s.token < 0 || s.token >= policy.vocab_size()) {
        throw std::out_of_range(fmt::format("token {} outside vocabulary of {}", s.token, policy.vocab_size()));
    }
}

void accumulate_step(GradTable& g, const TabularPolicy& policy, const Step& s, double weight) {
    check_step(policy, s);
    const auto p = policy.probs(s.context);
    auto& row = g[s.context];
    if (row.empty()) row.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        row[i] += weight * ((static_cast<int>(i) == s.token ? 1.0 : 0.0) - p[i]);
    }
}

}  // namespace

double log_prob(const TabularPolicy& policy, const Trajectory& traj) {
    double lp = 0.0;
    for (const auto& s : traj.steps) {
        check_step(policy, s);
        const auto& row = policy.logits().at(s.context);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double x : row) z += std::exp(x - mx);
        lp += row[static_cast<std::size_t>(s.token)] - mx - std::log(z);
    }
    return lp;
}

GradTable grad_logprob(const TabularPolicy& policy, const Trajectory& traj) {
    GradTable g;
    for (const auto& s : traj.steps) accumulate_step(g, policy, s, 1.0);
    return g;
}

GradTable pg_gradient(const TabularPolicy& policy, std::span<const Trajectory> trajectories) {
    GradTable g;
    for (const auto& t : trajectories) {
        if (t.reward != 1.0 && t.reward != -1.0) {
            throw std::invalid_argument(fmt::format("reward must be -1 or +1, got {}", t.reward));
        }
        for (const auto& s : t.steps) accumulate_step(g, policy, s, t.reward);
    }
    return g;
}

GradTable sft_gradient(const TabularPolicy& policy, std::span<const Trajectory> positives) {
    GradTable g;
    for (const auto& t : positives) {
        for (const auto& s : t.steps) accumulate_step(g, policy, s, 1.0);
    }
    return g;
}

double assumption_residual(const TabularPolicy& policy, const Trajectory& winner, const Trajectory& loser) {
    if (winner.steps.size() != loser.steps.size()) {
        throw std::invalid_argument("assumption_residual needs trajectories of equal length");
    }
    std::set<ContextId> differing_contexts;
    GradTable doubled;
    for (std::size_t t = 0; t < winner.steps.size(); ++t) {
        const auto& w = winner.steps[t];
        const auto& l = loser.steps[t];
        if (w == l) continue;
        if (w.context != l.context) {
            throw std::invalid_argument(fmt::format("step {} differs in context ({} vs {})", t, w.context, l.context));
        }
        differing_contexts.insert(w.context);
        accumulate_step(doubled, policy, w, 2.0);
    }
    if (differing_contexts.empty()) return 0.0;

    auto w = winner;
    auto l = loser;
    w.reward = 1.0;
    l.reward = -1.0;
    const Trajectory pair[] = {w, l};
    const auto pg = pg_gradient(policy, pair);
    double sq = 0.0;
    for (auto ctx : differing_contexts) {
        const auto& a = pg.at(ctx);
        const auto& b = doubled.at(ctx);
        for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(sq);
}

FiniteDiffReport finite_diff_check(const TabularPolicy& policy, const Trajectory& traj, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    const auto analytic = grad_logprob(policy, traj);
    FiniteDiffReport rep;
    auto probe = policy;
    for (const auto& [ctx, grow] : analytic) {
        auto& row = probe.row(ctx);
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double orig = row[i];
            row[i] = orig + epsilon;
            const double up = log_prob(probe, traj);
            row[i] = orig - epsilon;
            const double down = log_prob(probe, traj);
            row[i] = orig;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double abs_err = std::abs(numeric - grow[i]);
            rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
            const double denom = std::max(std::abs(grow[i]), std::abs(numeric));
            if (denom > 1e-10) rep.max_rel_error = std::max(rep.max_rel_error, abs_err / denom);
            ++rep.entries;
        }
    }
    return rep;
}

GradTable add(const GradTable& a, const GradTable& b) {
    GradTable out = a;
    for (const auto& [ctx, row] : b) {
        auto& dst = out[ctx];
        if (dst.empty()) dst.assign(row.size(), 0.0);
        for (std::size_t i = 0; i < row.size(); ++i) dst[i] += row[i];
    }
    return out;
}

GradTable scale(const GradTable& a, double s) {
    GradTable out = a;
    for (auto& [ctx, row] : out) {
        for (auto& x : row) x *= s;
    }
    return out;
}

double max_abs_diff(const GradTable& a, const GradTable& b) {
    double m = 0.0;
    auto visit = [&](const GradTable& x, const GradTable& y) {
        for (const auto& [ctx, row] : x) {
            auto it = y.find(ctx);
            for (std::size_t i = 0; i < row.size(); ++i) {
                const double other = it == y.end() ? 0.0 : it->second[i];
                m = std::max(m, std::abs(row[i] - other));
            }
        }
    };
    visit(a, b);
    visit(b, a);
    return m;
}

double frobenius(const GradTable& a) {
    double sq = 0.0;
    for (const auto& [ctx, row] : a) {
        for (double x : row) sq += x * x;
    }
    return std::sqrt(sq);
}

Trajectory random_trajectory(const TabularPolicy& policy, int length, std::mt19937_64& rng, double reward) {
    std::vector<ContextId> contexts;
    for (const auto& [ctx, row] : policy.logits()) contexts.push_back(ctx);
    std::uniform_int_distribution<std::size_t> pick_ctx(0, contexts.size() - 1);
    Trajectory t;
    t.reward = reward;
    for (int i = 0; i < length; ++i) {
        const auto ctx = contexts[pick_ctx(rng)];
        const auto p = policy.probs(ctx);
        std::discrete_distribution<int> tok(p.begin(), p.end());
        t.steps.push_back({ctx, tok(rng)});
    }
    return t;
}

LabReport run_lab(int seeds, std::uint64_t base_seed) {
    LabReport rep;
    rep.identity_seeds = seeds;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(base_seed + static_cast<std::uint64_t>(s));
        const int vocab = 2 + static_cast<int>(rng() % 7);
        const auto policy = TabularPolicy::random(vocab, 1 + static_cast<int>(rng() % 5), rng);
        std::vector<Trajectory> positives;
        const int count = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < count; ++i) positives.push_back(random_trajectory(policy, 1 + static_cast<int>(rng() % 8), rng));
        const auto sft = sft_gradient(policy, positives);
        rep.identity_max_diff = std::max(rep.identity_max_diff, max_abs_diff(sft, pg_gradient(policy, positives)));
        for (const auto& [ctx, row] : sft) {
            double sum = 0.0;
            for (double x : row) sum += x;
            rep.row_sum_max = std::max(rep.row_sum_max, std::abs(sum));
        }
        auto negated = positives.front();
        negated.reward = -1.0;
        const Trajectory one[] = {negated};
        rep.linearity_max_diff = std::max(
            rep.linearity_max_diff, max_abs_diff(pg_gradient(policy, one), scale(grad_logprob(policy, positives.front()), -1.0)));
        rep.fd_max_rel_error = std::max(rep.fd_max_rel_error, finite_diff_check(policy, positives.front(), 1e-5).max_rel_error);
    }

    const ContextId ctx0[] = {0};
    const Trajectory cancel{{{0, 0}, {0, 1}}, 1.0};
    rep.fd_zero_case_abs_error = finite_diff_check(TabularPolicy::uniform(2, ctx0), cancel, 1e-5).max_abs_error;
    const Trajectory w{{{0, 0}}, 1.0};
    const Trajectory l{{{0, 1}}, -1.0};
    rep.residual_binary_uniform = assumption_residual(TabularPolicy::uniform(2, ctx0), w, l);
    rep.residual_vocab3_uniform = assumption_residual(TabularPolicy::uniform(3, ctx0), w, l);

    for (int vocab = 2; vocab <= 8; ++vocab) {
        double sum = 0.0, mx = 0.0;
        std::mt19937_64 rng(base_seed ^ (0x5eedULL * static_cast<std::uint64_t>(vocab)));
        for (int s = 0; s < seeds; ++s) {
            const auto policy = TabularPolicy::random(vocab, 3, rng);
            auto winner = random_trajectory(policy, 6, rng);
            auto loser = winner;
            std::uniform_int_distribution<std::size_t> pos(0, winner.steps.size() - 1);
            auto& step = loser.steps[pos(rng)];
            std::uniform_int_distribution<int> shift(1, vocab - 1);
            step.token = (step.token + shift(rng)) % vocab;
            const double r = assumption_residual(policy, winner, loser);
            sum += r;
            mx = std::max(mx, r);
        }
        rep.residual_sweep[vocab] = {sum / std::max(seeds, 1), mx};
    }
    return rep;
}

std::string render_lab_report(const LabReport& r) {
    std::string out;
    out += "policy-gradient / SFT gradient lab\n";
    out += fmt::format("  identity  sft == pg(R=+1) over {} seeds: max |diff| = {:.3e}\n", r.identity_seeds, r.identity_max_diff);
    out += fmt::format("  rows      max |row sum| = {:.3e}\n", r.row_sum_max);
    out += fmt::format("  linearity max |pg(-tau) + grad(tau)| = {:.3e}\n", r.linearity_max_diff);
    out += fmt::format("  finite-difference max relative error = {:.3e}\n", r.fd_max_rel_error);
    out += fmt::format("  finite-difference zero-gradient case abs error = {:.3e}\n", r.fd_zero_case_abs_error);
    out += fmt::format("  residual  binary uniform, one differing step = {:.6f}\n", r.residual_binary_uniform);
    out += fmt::format("  residual  vocab-3 uniform, one differing step = {:.6f}\n", r.residual_vocab3_uniform);
    out += "  residual sweep (random policies, one differing step):\n";
    out += "    vocab   mean       max\n";
    for (const auto& [vocab, mm] : r.residual_sweep) {
        out += fmt::format("    {:>5}   {:.6f}   {:.6f}\n", vocab, mm.first, mm.second);
    }
    return out;
}

}  // namespace tpt::gradlab
