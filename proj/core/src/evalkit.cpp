#include "tpt/evalkit.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

#include "tpt/error.hpp"
#include "tpt/text.hpp"

namespace tpt::evalkit {
using nlohmann::json;

double pass_at_k(int n, int c, int k) {
    if (n < 0 || c < 0 || c > n) throw std::invalid_argument(fmt::format("pass_at_k: need 0 <= c <= n (n={}, c={})", n, c));
    if (k < 1 || k > n) throw std::invalid_argument(fmt::format("pass_at_k: need 1 <= k <= n (n={}, k={})", n, k));
    if (n - c < k) return 1.0;
    // C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k / i)
    double miss = 1.0;
    for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
    return 1.0 - miss;
}

EvalReport aggregate(std::span<const ProblemOutcome> problems, std::span<const int> k_list) {
    if (problems.empty()) throw ValidationError("cannot aggregate an empty problem list");

    EvalReport report;
    std::set<int> ns;
    for (const auto& p : problems) {
        const int n = static_cast<int>(p.correct.size());
        if (n == 0) throw ValidationError(fmt::format("problem '{}' has no samples", p.problem_id));
        const int c = static_cast<int>(std::count(p.correct.begin(), p.correct.end(), true));
        report.per_problem.push_back({p.problem_id, n, c});
        ns.insert(n);
    }
    report.n_samples_per_problem = *ns.begin();
    if (ns.size() > 1) {
        report.notes.push_back(fmt::format("sample counts vary across problems ({}..{})", *ns.begin(), *ns.rbegin()));
    }

    std::set<int> ks(k_list.begin(), k_list.end());
    ks.insert(1);
    const double count = static_cast<double>(problems.size());
    for (int k : ks) {
        if (k < 1) throw ValidationError(fmt::format("k must be >= 1, got {}", k));
        if (k > *ns.begin()) {
            throw ValidationError(fmt::format("k={} exceeds the {} samples drawn for some problem", k, *ns.begin()));
        }
        double sum = 0.0;
        int solved_first_k = 0;
        bool all_empirical = true;
        for (std::size_t i = 0; i < problems.size(); ++i) {
            const auto& t = report.per_problem[i];
            const auto& flags = problems[i].correct;
            const bool hit = std::find(flags.begin(), flags.begin() + k, true) != flags.begin() + k;
            solved_first_k += hit;
            if (k == 1) {
                sum += static_cast<double>(t.c) / static_cast<double>(t.n);
                all_empirical = all_empirical && t.n == 1;
            } else if (k == t.n) {
                sum += hit ? 1.0 : 0.0;
            } else {
                sum += pass_at_k(t.n, t.c, k);
                all_empirical = false;
            }
        }
        report.pass_at[k] = PassKEstimate{k, sum / count, all_empirical ? Method::Empirical : Method::Unbiased};
        report.correct_at[k] = solved_first_k;
        if (all_empirical && k > 1) {
            report.notes.push_back(fmt::format("Pass@{} counted empirically (n = k = {})", k, k));
        }
    }
    return report;
}

DiversityReport diversity(const std::vector<std::vector<std::string>>& samples_per_problem) {
    DiversityReport out;
    if (samples_per_problem.empty()) return out;
    double sum = 0.0;
    for (const auto& samples : samples_per_problem) {
        if (samples.empty()) throw ValidationError("diversity needs at least one sample per problem");
        std::set<std::string> distinct;
        for (const auto& s : samples) distinct.insert(text::collapse_whitespace(s));
        const double ratio = static_cast<double>(distinct.size()) / static_cast<double>(samples.size());
        out.per_problem.push_back(ratio);
        sum += ratio;
    }
    out.mean_distinct_ratio = sum / static_cast<double>(samples_per_problem.size());
    return out;
}

EvalReport evaluate_records(std::span<const SolutionRecord> records, std::span<const std::string> problem_ids,
                            std::span<const int> k_list, const std::string& model_ref) {
    std::unordered_map<std::string, std::vector<const SolutionRecord*>> grouped;
    for (const auto& r : records) grouped[r.problem_id].push_back(&r);

    std::vector<ProblemOutcome> outcomes;
    std::vector<std::vector<std::string>> texts;
    for (const auto& id : problem_ids) {
        auto it = grouped.find(id);
        if (it == grouped.end()) continue;
        auto& group = it->second;
        std::sort(group.begin(), group.end(),
                  [](const auto* a, const auto* b) { return a->sample_index < b->sample_index; });
        ProblemOutcome po{id, {}};
        std::vector<std::string> t;
        for (const auto* r : group) {
            if (!r->verdict) throw ValidationError(fmt::format("eval record for '{}' has no verdict", id));
            po.correct.push_back(*r->verdict == Verdict::Correct);
            t.push_back(r->text);
        }
        outcomes.push_back(std::move(po));
        texts.push_back(std::move(t));
    }
    auto report = aggregate(outcomes, k_list);
    report.model_ref = model_ref;
    report.diversity = diversity(texts);
    if (outcomes.size() < problem_ids.size()) {
        report.notes.push_back(
            fmt::format("{} of {} problems had no samples", problem_ids.size() - outcomes.size(), problem_ids.size()));
    }
    return report;
}

bool shows_mode_collapse(std::span<const EvalReport> rounds) {
    if (rounds.size() < 2) return false;
    for (std::size_t i = 1; i < rounds.size(); ++i) {
        if (!(rounds[i].pass_at.at(1).value > rounds[i - 1].pass_at.at(1).value)) return false;
        if (rounds[i].diversity.mean_distinct_ratio > rounds[i - 1].diversity.mean_distinct_ratio) return false;
    }
    return true;
}

std::string_view to_string(Method m) { return m == Method::Empirical ? "empirical" : "unbiased"; }

void to_json(json& j, const EvalReport& v) {
    json per = json::array();
    for (const auto& t : v.per_problem) per.push_back({{"problem_id", t.problem_id}, {"n", t.n}, {"c", t.c}});
    json pass = json::object();
    for (const auto& [k, e] : v.pass_at) pass[std::to_string(k)] = {{"value", e.value}, {"method", to_string(e.method)}};
    json correct = json::object();
    for (const auto& [k, c] : v.correct_at) correct[std::to_string(k)] = c;
    j = json{{"model_ref", v.model_ref},
             {"n_samples_per_problem", v.n_samples_per_problem},
             {"pass_at", pass},
             {"correct_at", correct},
             {"diversity", {{"mean_distinct_ratio", v.diversity.mean_distinct_ratio}, {"per_problem", v.diversity.per_problem}}},
             {"notes", v.notes},
             {"per_problem", per}};
}

void from_json(const json& j, EvalReport& v) {
    j.at("model_ref").get_to(v.model_ref);
    j.at("n_samples_per_problem").get_to(v.n_samples_per_problem);
    v.per_problem.clear();
    for (const auto& t : j.at("per_problem")) {
        v.per_problem.push_back({t.at("problem_id").get<std::string>(), t.at("n").get<int>(), t.at("c").get<int>()});
    }
    v.pass_at.clear();
    for (const auto& [k, e] : j.at("pass_at").items()) {
        const int kk = std::stoi(k);
        v.pass_at[kk] = PassKEstimate{kk, e.at("value").get<double>(),
                                      e.at("method").get<std::string>() == "empirical" ? Method::Empirical
                                                                                       : Method::Unbiased};
    }
    v.correct_at.clear();
    for (const auto& [k, c] : j.at("correct_at").items()) v.correct_at[std::stoi(k)] = c.get<int>();
    const auto& d = j.at("diversity");
    d.at("mean_distinct_ratio").get_to(v.diversity.mean_distinct_ratio);
    d.at("per_problem").get_to(v.diversity.per_problem);
    j.at("notes").get_to(v.notes);
}

}  // namespace tpt::evalkit
