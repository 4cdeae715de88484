#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tpt/curator.hpp"
#include "tpt/dataset_io.hpp"
#include "tpt/error.hpp"
#include "tpt/orchestrator.hpp"
#include "tpt/report.hpp"

using namespace tpt;
namespace fs = std::filesystem;

namespace {

testkit::SimScenario small(int rounds) {
    testkit::SimScenario s;
    s.n_problems = 20;
    s.rounds = rounds;
    s.k = 4;
    s.f = 10;
    s.eval_samples = 4;
    return s;
}

}  // namespace

TEST(Orchestrator, SingleRoundStageOrderAndArtifacts) {
    testkit::TempDir tmp;
    const auto config = testkit::make_sim_config(small(1), tmp.path());
    std::vector<std::pair<int, std::string>> seen;
    RunOptions opts;
    opts.on_stage = [&](int r, std::string_view s) { seen.emplace_back(r, std::string(s)); };
    const auto state = run_tpt(config, opts);

    const std::vector<std::pair<int, std::string>> expected{
        {0, "generate"}, {0, "prune"}, {0, "curate"}, {0, "evaluate"},
        {1, "train"},    {1, "generate"}, {1, "prune"}, {1, "curate"}, {1, "evaluate"}};
    EXPECT_EQ(seen, expected);
    ASSERT_EQ(state.manifests.size(), 2u);
    EXPECT_EQ(state.completed_rounds, 1);
    EXPECT_EQ(state.manifests[1].stage_order, (std::vector<std::string>{"train", "generate", "prune", "curate", "evaluate"}));
    EXPECT_EQ(state.manifests[0].counts.generated, 80);
    EXPECT_EQ(state.manifests[1].counts.curated, 10);
    ASSERT_TRUE(state.manifests[1].output_model);
    EXPECT_EQ(state.manifests[1].input_model.name, "sim-base");
    EXPECT_EQ(state.registry.entries().at(0).model, *state.manifests[1].output_model);

    const RunDir dir(config.runs_root, config.run_id);
    for (const char* f : {"generations.jsonl", "judged.jsonl", "pruned.jsonl", "dataset.jsonl", "eval.json",
                          "eval_samples.jsonl", "timing.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir.artifact(1, f))) << f;
    }
    EXPECT_TRUE(fs::exists(dir.artifact(1, "train/spec.json")));
    EXPECT_TRUE(fs::exists(dir.registry_file()));
    EXPECT_FALSE(fs::exists(dir.failure_file()));

    const auto rows = build_report(dir.path());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].stage, "Baseline");
    EXPECT_EQ(rows[1].stage, "Init (Model 1)");
    EXPECT_EQ(rows[1].data, 10);
}

TEST(Orchestrator, ResumeOfCompletedRunIsNoOp) {
    testkit::TempDir tmp;
    const auto config = testkit::make_sim_config(small(1), tmp.path());
    run_tpt(config);
    const RunDir dir(config.runs_root, config.run_id);
    const auto before = testkit::digest_tree(dir.path());
    int stages = 0;
    RunOptions opts;
    opts.on_stage = [&](int, std::string_view) { ++stages; };
    const auto state = resume(config.runs_root, config.run_id, opts);
    EXPECT_EQ(stages, 0);
    EXPECT_EQ(state.completed_rounds, 1);
    EXPECT_EQ(testkit::digest_tree(dir.path()), before);
}

TEST(Orchestrator, StopAndResumeMatchesUninterrupted) {
    testkit::TempDir tmp;
    const auto ca = testkit::make_sim_config(small(2), tmp.path(), "whole");
    const auto cb = testkit::make_sim_config(small(2), tmp.path(), "split");
    run_tpt(ca);
    RunOptions stop;
    stop.stop_after_round = 0;
    EXPECT_EQ(run_tpt(cb, stop).manifests.size(), 1u);
    // Leftover partial round must be discarded on resume.
    testkit::spit(RunDir(cb.runs_root, cb.run_id).artifact(1, "generations.jsonl"), "partial");
    resume(cb.runs_root, cb.run_id);
    EXPECT_EQ(testkit::digest_tree(RunDir(ca.runs_root, ca.run_id).path()),
              testkit::digest_tree(RunDir(cb.runs_root, cb.run_id).path()));
}

TEST(Orchestrator, TamperedDatasetIsIntegrityError) {
    testkit::TempDir tmp;
    const auto config = testkit::make_sim_config(small(1), tmp.path());
    run_tpt(config);
    const RunDir dir(config.runs_root, config.run_id);
    const auto path = dir.artifact(0, "dataset.jsonl");
    testkit::spit(path, testkit::slurp(path) + "\n");
    try {
        resume(config.runs_root, config.run_id);
        FAIL() << "expected IntegrityError";
    } catch (const IntegrityError& e) {
        EXPECT_NE(std::string(e.what()).find("dataset.jsonl"), std::string::npos) << e.what();
    }
}

TEST(Orchestrator, ConflictingConfigIsRejected) {
    testkit::TempDir tmp;
    auto config = testkit::make_sim_config(small(1), tmp.path());
    RunOptions stop;
    stop.stop_after_round = 0;
    run_tpt(config, stop);
    config.generation.sampling.k = 5;
    EXPECT_THROW(run_tpt(config), ConfigError);
}

TEST(Orchestrator, FailingHookIsStageErrorWithFailureRecord) {
    testkit::TempDir tmp;
    auto config = testkit::make_sim_config(small(2), tmp.path());
    testkit::spit(tmp / "fail.sh", "#!/bin/sh\nexit 1\n", true);
    config.trainer.hook = {(tmp / "fail.sh").string()};
    try {
        run_tpt(config);
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_NE(std::string(e.what()).find("train"), std::string::npos) << e.what();
    }
    const RunDir dir(config.runs_root, config.run_id);
    const auto failure = read_json_file(dir.failure_file());
    EXPECT_EQ(failure.at("stage"), "train");
    EXPECT_EQ(failure.at("round"), 1);
    EXPECT_TRUE(fs::exists(dir.manifest(0)));
    EXPECT_FALSE(fs::exists(dir.manifest(1)));
    EXPECT_EQ(build_report(dir.path()).size(), 1u);
}

TEST(Orchestrator, MissingHookIsConfigError) {
    testkit::TempDir tmp;
    auto config = testkit::make_sim_config(small(1), tmp.path());
    config.trainer.hook = {"/no/such/hook"};
    EXPECT_THROW(run_tpt(config), ConfigError);
}

TEST(Orchestrator, AccumulatingRunsDrawFromPriorDatasets) {
    testkit::TempDir tmp;
    auto config = testkit::make_sim_config(small(2), tmp.path());
    config.curation.accumulate = true;
    const auto state = run_tpt(config);
    const RunDir dir(config.runs_root, config.run_id);
    const auto r0 = curator::read_pairs(dir.artifact(0, "dataset.jsonl"));
    const auto r2 = curator::read_pairs(dir.artifact(2, "dataset.jsonl"));
    EXPECT_EQ(r2.size(), 10u);
    bool from_earlier = false;
    for (const auto& p : r2) from_earlier |= p.source_round < 2;
    EXPECT_TRUE(from_earlier);
    EXPECT_EQ(state.manifests.size(), 3u);
    EXPECT_FALSE(r0.empty());
}

TEST(Orchestrator, MixedRealDataShare) {
    testkit::TempDir tmp;
    auto config = testkit::make_sim_config(small(1), tmp.path());
    curator::CuratedDataset real;
    for (const auto& p : load_problems(config.problems_path, TaskKind::Math)) {
        real.pairs.push_back({p.id, "q", "human\n#### " + p.final_answer(), -1, curator::PairOrigin::Real});
    }
    curator::write_dataset(real, tmp / "real.jsonl");
    config.curation.mix = curator::MixSpec{0.5, tmp / "real.jsonl"};
    run_tpt(config);
    const auto pairs = curator::read_pairs(RunDir(config.runs_root, config.run_id).artifact(1, "dataset.jsonl"));
    int n_real = 0;
    for (const auto& p : pairs) n_real += p.origin == curator::PairOrigin::Real;
    EXPECT_EQ(pairs.size(), 10u);
    EXPECT_EQ(n_real, 5);
}

TEST(Stages, EvalSubsetSelection) {
    auto problems = sim::synthetic_problems(5, 6, 1);
    EvalConfig eval;
    eval.subset_size = 4;
    const auto first = stages::eval_problems(problems, eval);
    ASSERT_EQ(first.size(), 4u);
    EXPECT_EQ(first[0].id, "sim-0005");
    EXPECT_EQ(first[3].id, "sim-0008");
    eval.subset_seed = 3;
    const auto drawn = stages::eval_problems(problems, eval);
    ASSERT_EQ(drawn.size(), 4u);
    EXPECT_EQ(stages::eval_problems(problems, eval), drawn);
    for (std::size_t i = 1; i < drawn.size(); ++i) EXPECT_LT(drawn[i - 1].id, drawn[i].id);
    eval.subset_size = 100;
    EXPECT_EQ(stages::eval_problems(problems, eval).size(), 6u);
    EXPECT_EQ(stages::train_problems(problems).size(), 5u);
}

TEST(Report, LabelsAndRendering) {
    EXPECT_EQ(stage_label(0), "Baseline");
    EXPECT_EQ(stage_label(1), "Init (Model 1)");
    EXPECT_EQ(stage_label(3), "Rec 2 (Model 3)");
    EXPECT_THROW(build_report({}, {}), ValidationError);
    ReportRow row;
    row.stage = "Baseline";
    row.source = "-";
    row.pass1 = 0.4567;
    row.pass_at[20] = 0.9;
    row.correct_at[20] = 45;
    row.diversity = 0.5;
    const auto text = render_report({row});
    EXPECT_NE(text.find("45.7"), std::string::npos) << text;
    EXPECT_NE(text.find("90.0"), std::string::npos) << text;
    EXPECT_NE(text.find("Pass@20"), std::string::npos) << text;
    EXPECT_EQ(report_to_json({row}).size(), 1u);
}
