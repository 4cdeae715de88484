// tpt: command-line driver for think-prune-train runs.
//
// Exit codes: 0 success, 1 stage or runtime failure, 2 configuration error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tpt/dataset_io.hpp"
#include "tpt/digest.hpp"
#include "tpt/error.hpp"
#include "tpt/gradlab.hpp"
#include "tpt/orchestrator.hpp"
#include "tpt/report.hpp"
#include "tpt/run_config.hpp"
#include "tpt/simbackend.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

fs::path self_dir() {
    std::error_code ec;
    auto exe = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::path{} : exe.parent_path();
}

struct ConfigArgs {
    std::string path;
    std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("-c,--config", args.path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", args.overrides, "Override a config field: key.path=value (repeatable)");
}

// The stub trainer shipped next to this binary is the default hook.
tpt::RunConfig load_config(const ConfigArgs& args) {
    json doc;
    try {
        doc = tpt::read_json_file(args.path);
    } catch (const tpt::Error& e) {
        throw tpt::ConfigError(e.what());
    }
    tpt::apply_overrides(doc, args.overrides);
    if (!doc.contains("trainer") || !doc["trainer"].contains("hook")) {
        const auto stub = self_dir() / "tpt-stub-trainer";
        if (fs::exists(stub)) doc["trainer"]["hook"] = json::array({stub.string()});
    }
    return tpt::run_config_from_json(doc, fs::absolute(args.path).parent_path());
}

std::vector<tpt::ProblemSpec> load_config_problems(const tpt::RunConfig& config) {
    try {
        return tpt::load_problems(config.problems_path, config.kind);
    } catch (const tpt::Error& e) {
        throw tpt::ConfigError(e.what());
    }
}

// "base" selects the config's base model; otherwise a ModelRef JSON file whose
// relative state path is resolved against the file's directory.
std::pair<tpt::ModelRef, fs::path> load_model(const std::string& arg, const tpt::RunConfig& config) {
    if (arg.empty() || arg == "base") return {config.base_model, fs::path{}};
    try {
        return {tpt::read_json_file(arg).get<tpt::ModelRef>(), fs::path(arg).parent_path()};
    } catch (const json::exception& e) {
        throw tpt::ConfigError(fmt::format("{}: not a model reference: {}", arg, e.what()));
    }
}

std::string run_summary(const tpt::RunState& state) {
    return fmt::format("rounds complete: {} (training rounds: {}), current model: {}", state.manifests.size(),
                       state.completed_rounds, state.current_model.name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Think-prune-train orchestration"};
    app.require_subcommand(1);
    bool verbose = false;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    // run
    ConfigArgs run_cfg;
    std::optional<int> until_round;
    auto* run = app.add_subcommand("run", "Execute all rounds of a run (continues an existing run directory)");
    add_config_args(run, run_cfg);
    run->add_option("--until-round", until_round, "Stop after this round's manifest is written");

    // resume
    std::string resume_root = "runs";
    std::string resume_id;
    auto* resume = app.add_subcommand("resume", "Verify completed rounds and continue an interrupted run");
    resume->add_option("--runs-root", resume_root, "Directory holding run directories");
    resume->add_option("--run-id", resume_id, "Run to resume")->required();

    // generate
    ConfigArgs gen_cfg;
    std::string gen_model;
    std::string gen_out;
    int gen_round = 0;
    auto* generate = app.add_subcommand("generate", "Sample k solutions per train problem");
    add_config_args(generate, gen_cfg);
    generate->add_option("--model", gen_model, "ModelRef JSON file, or 'base'");
    generate->add_option("--round", gen_round, "Round number (keys the sampling seeds)");
    generate->add_option("-o,--out", gen_out, "Output JSONL")->required();

    // prune
    ConfigArgs prune_cfg;
    std::string prune_in;
    std::string prune_out;
    std::string prune_judged;
    auto* prune = app.add_subcommand("prune", "Judge generations and keep those the strategy accepts");
    add_config_args(prune, prune_cfg);
    prune->add_option("-i,--in", prune_in, "Generations JSONL")->required()->check(CLI::ExistingFile);
    prune->add_option("-o,--out", prune_out, "Pruned JSONL")->required();
    prune->add_option("--judged", prune_judged, "Also write every record with its verdict here");

    // curate
    ConfigArgs cur_cfg;
    std::string cur_in;
    std::string cur_out;
    std::string cur_prev;
    int cur_round = 0;
    auto* curate = app.add_subcommand("curate", "Deduplicate and sample a fixed-size training set");
    add_config_args(curate, cur_cfg);
    curate->add_option("-i,--in", cur_in, "Pruned JSONL")->required()->check(CLI::ExistingFile);
    curate->add_option("-o,--out", cur_out, "Dataset JSONL")->required();
    curate->add_option("--round", cur_round, "Round number recorded on the pairs");
    curate->add_option("--previous", cur_prev, "Previous dataset (accumulate mode)")->check(CLI::ExistingFile);

    // train
    ConfigArgs train_cfg;
    std::string train_model;
    std::string train_dataset;
    std::string train_dir;
    int train_round = 1;
    auto* train = app.add_subcommand("train", "Invoke the trainer hook on a dataset");
    add_config_args(train, train_cfg);
    train->add_option("--model", train_model, "ModelRef JSON file, or 'base'");
    train->add_option("--dataset", train_dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--work-dir", train_dir, "Directory for spec.json, train.log and model_ref.out")->required();
    train->add_option("--round", train_round, "Round number of the produced model");

    // eval
    ConfigArgs eval_cfg;
    std::string eval_model;
    std::string eval_out;
    std::string eval_samples;
    int eval_round = 0;
    auto* eval = app.add_subcommand("eval", "Evaluate a model on the configured eval subset");
    add_config_args(eval, eval_cfg);
    eval->add_option("--model", eval_model, "ModelRef JSON file, or 'base'");
    eval->add_option("--round", eval_round, "Round number (keys the sampling seeds)");
    eval->add_option("-o,--out", eval_out, "EvalReport JSON")->required();
    eval->add_option("--samples", eval_samples, "Also write the judged samples here");

    // report
    std::string report_root = "runs";
    std::string report_id;
    std::string report_dir;
    bool report_json = false;
    auto* report = app.add_subcommand("report", "Tabulate per-round evaluation results");
    report->add_option("--runs-root", report_root, "Directory holding run directories");
    report->add_option("--run-id", report_id, "Run to report on");
    report->add_option("--run-dir", report_dir, "Run directory (instead of --runs-root/--run-id)");
    report->add_flag("--json", report_json, "Emit JSON rows instead of a text table");

    // gradlab
    int lab_seeds = 100;
    std::uint64_t lab_seed = 20250101;
    auto* gradlab = app.add_subcommand("gradlab", "Check the SFT / policy-gradient identity on tabular policies");
    gradlab->add_option("--seeds", lab_seeds, "Random policies per check")->check(CLI::PositiveNumber);
    gradlab->add_option("--seed", lab_seed, "Base seed");

    // sim-init
    std::string si_problems;
    std::string si_kind = "math";
    std::string si_out;
    double si_p = 0.3;
    int si_pool = 8;
    std::int64_t si_seed = 0;
    double si_spread = 0.0;
    auto* sim_init = app.add_subcommand("sim-init", "Write an initial simulated model state for a problem set");
    sim_init->add_option("--problems", si_problems, "Problems JSONL")->required()->check(CLI::ExistingFile);
    sim_init->add_option("--kind", si_kind, "Task kind")->check(CLI::IsMember({"math"}));
    sim_init->add_option("-o,--out", si_out, "State JSON")->required();
    sim_init->add_option("--p", si_p, "Initial per-problem success probability")->check(CLI::Range(0.0, 1.0));
    sim_init->add_option("--pool", si_pool, "Distinct reasoning templates per problem")->check(CLI::PositiveNumber);
    sim_init->add_option("--seed", si_seed, "State seed");
    sim_init->add_option("--spread", si_spread, "Draw p per problem from [p - spread, p + spread]");

    // sim-problems
    int sp_train = 100;
    int sp_test = 0;
    std::string sp_out;
    auto* sim_problems = app.add_subcommand("sim-problems", "Write a synthetic math problem set");
    sim_problems->add_option("--train", sp_train, "Train-split problems")->check(CLI::NonNegativeNumber);
    sim_problems->add_option("--test", sp_test, "Test-split problems")->check(CLI::NonNegativeNumber);
    sim_problems->add_option("-o,--out", sp_out, "Problems JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    spdlog::set_default_logger(spdlog::default_logger());
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*run) {
            auto config = load_config(run_cfg);
            tpt::RunOptions opts;
            opts.stop_after_round = until_round;
            const auto state = tpt::run_tpt(config, opts);
            std::cout << run_summary(state) << "\n";
        } else if (*resume) {
            const auto state = tpt::resume(resume_root, resume_id);
            std::cout << run_summary(state) << "\n";
        } else if (*generate) {
            const auto config = load_config(gen_cfg);
            const auto problems = tpt::stages::train_problems(load_config_problems(config));
            const auto [model, base] = load_model(gen_model, config);
            auto backend = tpt::make_backend(model, base, config.endpoint);
            const auto result = tpt::stages::generate(config, *backend, model, problems, gen_round);
            tpt::write_records(result.records, gen_out);
            spdlog::info("{} records, {} failed samples", result.records.size(), result.failures.size());
            if (!result.failures.empty()) {
                for (const auto& f : result.failures) {
                    spdlog::warn("{}#{} failed after {} attempts: {}", f.problem_id, f.sample_index, f.attempts, f.message);
                }
            }
        } else if (*prune) {
            const auto config = load_config(prune_cfg);
            const auto problems = load_config_problems(config);
            auto records = tpt::read_records(prune_in);
            tpt::stages::judge(config, records, problems);
            if (!prune_judged.empty()) tpt::write_records(records, prune_judged);
            const auto kept = tpt::stages::prune(config, records);
            tpt::write_records(kept, prune_out);
            spdlog::info("kept {} of {} records", kept.size(), records.size());
        } else if (*curate) {
            const auto config = load_config(cur_cfg);
            const auto problems = load_config_problems(config);
            const auto pruned = tpt::read_records(cur_in);
            std::vector<tpt::curator::TrainingPair> previous;
            if (!cur_prev.empty()) previous = tpt::curator::read_pairs(cur_prev);
            auto ds = tpt::stages::curate(config, pruned, problems, cur_round, previous);
            tpt::curator::write_dataset(ds, cur_out);
            if (ds.shortfall_note) spdlog::warn("{}", *ds.shortfall_note);
            std::cout << fmt::format("{} pairs, sha256 {}\n", ds.pairs.size(), ds.digest);
        } else if (*train) {
            const auto config = load_config(train_cfg);
            auto [model, base] = load_model(train_model, config);
            fs::create_directories(train_dir);
            if (model.kind == tpt::ModelKind::Simulated && !fs::path(model.uri).is_absolute()) {
                model.uri = fs::absolute(base / model.uri).lexically_normal().string();
            }
            tpt::curator::CuratedDataset ds;
            ds.pairs = tpt::curator::read_pairs(train_dataset);
            ds.digest = tpt::digest_file(train_dataset);
            const auto spec = tpt::trainhook::build_job_spec(model, ds, fs::absolute(train_dataset).string(), train_round,
                                                             config.trainer.overrides);
            const auto result = tpt::trainhook::invoke_trainer(spec, fs::path(train_dir) / "spec.json", config.trainer.hook);
            if (result.status != tpt::trainhook::TrainerStatus::Succeeded) {
                spdlog::error("trainer exited with code {}; log at {}", result.exit_code, result.log_path.string());
                return kExitStage;
            }
            std::cout << json(*result.output_model).dump(2) << "\n";
        } else if (*eval) {
            const auto config = load_config(eval_cfg);
            const auto problems = tpt::stages::eval_problems(load_config_problems(config), config.eval);
            if (problems.empty()) throw tpt::ConfigError("eval split has no problems");
            const auto [model, base] = load_model(eval_model, config);
            auto backend = tpt::make_backend(model, base, config.endpoint);
            std::vector<tpt::SolutionRecord> samples;
            const auto rep = tpt::stages::evaluate(config, *backend, model, problems, eval_round, &samples);
            tpt::write_json_file(json(rep), eval_out);
            if (!eval_samples.empty()) tpt::write_records(samples, eval_samples);
            std::cout << tpt::render_report({tpt::ReportRow{eval_round, model.name, "-", std::nullopt,
                                                            rep.pass_at.at(1).value, {}, {},
                                                            rep.diversity.mean_distinct_ratio,
                                                            static_cast<int>(rep.per_problem.size())}});
        } else if (*report) {
            fs::path dir = report_dir.empty() ? fs::path(report_root) / report_id : fs::path(report_dir);
            if (report_dir.empty() && report_id.empty()) throw tpt::ConfigError("report needs --run-id or --run-dir");
            const auto rows = tpt::build_report(dir);
            std::cout << (report_json ? tpt::report_to_json(rows).dump(2) + "\n" : tpt::render_report(rows));
        } else if (*gradlab) {
            std::cout << tpt::gradlab::render_lab_report(tpt::gradlab::run_lab(lab_seeds, lab_seed));
        } else if (*sim_init) {
            const auto problems = tpt::load_problems(si_problems, tpt::task_kind_from_string(si_kind));
            tpt::sim::save_state(tpt::sim::init_state(problems, si_p, si_pool, si_seed, si_spread), si_out);
        } else if (*sim_problems) {
            tpt::write_problems(tpt::sim::synthetic_problems(sp_train, sp_test), sp_out);
        }
    } catch (const tpt::ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return kExitConfig;
    } catch (const tpt::StageError& e) {
        spdlog::error("round {} stage '{}' failed: {}", e.round(), e.stage(), e.cause());
        return kExitStage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitStage;
    }
    return kExitOk;
}
