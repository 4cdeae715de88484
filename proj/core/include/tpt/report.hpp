#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tpt/evalkit.hpp"
#include "tpt/types.hpp"

namespace tpt {

struct ReportRow {
    int round = 0;
    // "Baseline", "Init (Model 1)", "Rec 1 (Model 2)", ...
    std::string stage;
    // Model trained on (round >= 1) or "-" for the baseline.
    std::string source;
    // Size of the dataset trained on; nullopt for the baseline.
    std::optional<std::int64_t> data;
    double pass1 = 0.0;
    std::map<int, double> pass_at;
    std::map<int, int> correct_at;
    double diversity = 0.0;
    int n_problems = 0;
};

std::string stage_label(int round);

// Rows from completed rounds. Throws ValidationError when no round has an
// eval report.
std::vector<ReportRow> build_report(const std::vector<RoundManifest>& manifests,
                                    const std::vector<evalkit::EvalReport>& evals);
std::vector<ReportRow> build_report(const std::filesystem::path& run_dir);

// Fixed-width text table; percentages with one decimal.
std::string render_report(const std::vector<ReportRow>& rows);
nlohmann::json report_to_json(const std::vector<ReportRow>& rows);

}  // namespace tpt
