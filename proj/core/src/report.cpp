#include "tpt/report.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "tpt/dataset_io.hpp"
#include "tpt/error.hpp"
#include "tpt/run_dir.hpp"

namespace tpt {
namespace fs = std::filesystem;
using nlohmann::json;

std::string stage_label(int round) {
    if (round == 0) return "Baseline";
    if (round == 1) return "Init (Model 1)";
    return fmt::format("Rec {} (Model {})", round - 1, round);
}

std::vector<ReportRow> build_report(const std::vector<RoundManifest>& manifests,
                                    const std::vector<evalkit::EvalReport>& evals) {
    if (evals.empty()) throw ValidationError("no eval reports to tabulate");
    if (evals.size() > manifests.size()) throw ValidationError("more eval reports than completed rounds");
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < evals.size(); ++i) {
        const auto& m = manifests[i];
        const auto& e = evals[i];
        ReportRow row;
        row.round = m.round;
        row.stage = stage_label(m.round);
        if (m.round == 0) {
            row.source = "-";
        } else {
            row.source = m.input_model.name;
            row.data = manifests[i - 1].counts.curated;
        }
        if (auto it = e.pass_at.find(1); it != e.pass_at.end()) row.pass1 = it->second.value;
        for (const auto& [k, est] : e.pass_at) {
            if (k != 1) row.pass_at[k] = est.value;
        }
        for (const auto& [k, c] : e.correct_at) {
            if (k != 1) row.correct_at[k] = c;
        }
        row.diversity = e.diversity.mean_distinct_ratio;
        row.n_problems = static_cast<int>(e.per_problem.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ReportRow> build_report(const fs::path& run_dir) {
    const RunDir dir(run_dir);
    std::vector<RoundManifest> manifests;
    std::vector<evalkit::EvalReport> evals;
    for (int r = 0;; ++r) {
        if (!fs::exists(dir.manifest(r))) break;
        manifests.push_back(read_json_file(dir.manifest(r)).get<RoundManifest>());
        evals.push_back(read_json_file(dir.artifact(r, artifacts::kEval)).get<evalkit::EvalReport>());
    }
    return build_report(manifests, evals);
}

std::string render_report(const std::vector<ReportRow>& rows) {
    std::vector<int> ks;
    for (const auto& r : rows) {
        for (const auto& [k, v] : r.pass_at) {
            if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
        }
    }
    std::sort(ks.begin(), ks.end());

    std::vector<std::string> header{"Stage", "Source", "Data", "Pass@1"};
    for (int k : ks) header.push_back(fmt::format("Pass@{}", k));
    for (int k : ks) header.push_back(fmt::format("Correct@{}", k));
    header.emplace_back("Diversity");

    std::vector<std::vector<std::string>> cells{header};
    for (const auto& r : rows) {
        std::vector<std::string> line{r.stage, r.source, r.data ? std::to_string(*r.data) : "-",
                                      fmt::format("{:.1f}", 100.0 * r.pass1)};
        for (int k : ks) {
            auto it = r.pass_at.find(k);
            line.push_back(it == r.pass_at.end() ? "-" : fmt::format("{:.1f}", 100.0 * it->second));
        }
        for (int k : ks) {
            auto it = r.correct_at.find(k);
            line.push_back(it == r.correct_at.end() ? "-" : std::to_string(it->second));
        }
        line.push_back(fmt::format("{:.3f}", r.diversity));
        cells.push_back(std::move(line));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    std::string out;
    for (std::size_t li = 0; li < cells.size(); ++li) {
        const auto& line = cells[li];
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) out += "  ";
            // Left-align the two text columns, right-align numbers.
            out += c < 2 ? fmt::format("{:<{}}", line[c], width[c]) : fmt::format("{:>{}}", line[c], width[c]);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
        if (li == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
        }
    }
    return out;
}

json report_to_json(const std::vector<ReportRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json pass = json::object();
        for (const auto& [k, v] : r.pass_at) pass[std::to_string(k)] = v;
        json correct = json::object();
        for (const auto& [k, v] : r.correct_at) correct[std::to_string(k)] = v;
        arr.push_back(json{{"round", r.round},
                           {"stage", r.stage},
                           {"source", r.source},
                           {"data", r.data ? json(*r.data) : json(nullptr)},
                           {"pass1", r.pass1},
                           {"pass_at", pass},
                           {"correct_at", correct},
                           {"diversity", r.diversity},
                           {"n_problems", r.n_problems}});
    }
    return arr;
}

}  // namespace tpt
