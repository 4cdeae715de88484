#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpt/types.hpp"

namespace tpt::evalkit {

enum class Method { Empirical, Unbiased };

struct PassKEstimate {
    int k = 1;
    double value = 0.0;
    Method method = Method::Unbiased;

    bool operator==(const PassKEstimate&) const = default;
};

struct ProblemTally {
    std::string problem_id;
    int n = 0;
    int c = 0;

    bool operator==(const ProblemTally&) const = default;
};

// Per-problem correctness in sample order; needed because Correct@k looks
// at the first k samples.
struct ProblemOutcome {
    std::string problem_id;
    std::vector<bool> correct;
};

struct DiversityReport {
    double mean_distinct_ratio = 1.0;
    std::vector<double> per_problem;

    bool operator==(const DiversityReport&) const = default;
};

struct EvalReport {
    std::string model_ref;
    int n_samples_per_problem = 0;
    std::vector<ProblemTally> per_problem;
    std::map<int, PassKEstimate> pass_at;
    std::map<int, int> correct_at;
    DiversityReport diversity;
    std::vector<std::string> notes;

    bool operator==(const EvalReport&) const = default;
};

// Unbiased pass@k: 1 - C(n-c, k) / C(n, k), evaluated as a running product
// so no binomial is ever formed. Throws std::invalid_argument outside
// 0 <= c <= n, 1 <= k <= n.
double pass_at_k(int n, int c, int k);

// pass_at[k] is the mean of per-problem estimates: empirical (at least one
// correct among the first k) when k == n, unbiased otherwise. correct_at[k]
// counts problems with a correct sample among their first k.
EvalReport aggregate(std::span<const ProblemOutcome> problems, std::span<const int> k_list);

DiversityReport diversity(const std::vector<std::vector<std::string>>& samples_per_problem);

// Groups verdict-annotated records by problem (order of `problem_ids`,
// samples by sample_index) and builds the full report. Only Verdict::Correct
// counts as solved.
EvalReport evaluate_records(std::span<const SolutionRecord> records, std::span<const std::string> problem_ids,
                            std::span<const int> k_list, const std::string& model_ref);

// Rising Pass@1 with non-increasing diversity across consecutive reports.
bool shows_mode_collapse(std::span<const EvalReport> rounds);

std::string_view to_string(Method m);

void to_json(nlohmann::json& j, const EvalReport& v);
void from_json(const nlohmann::json& j, EvalReport& v);

}  // namespace tpt::evalkit
