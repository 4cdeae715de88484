#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tpt/error.hpp"
#include "tpt/run_config.hpp"

using namespace tpt;
using nlohmann::json;

namespace {

json minimal() {
    return json{{"problems", {{"path", "data/problems.jsonl"}}},
                {"base_model", {{"name", "m0"}, {"kind", "simulated"}, {"uri", "models/m0.state.json"}}}};
}

}  // namespace

TEST(RunConfigTest, DefaultsFollowRecipe) {
    const auto c = run_config_from_json(minimal(), "/cfg");
    EXPECT_EQ(c.problems_path, "/cfg/data/problems.jsonl");
    EXPECT_EQ(c.base_model.uri, "/cfg/models/m0.state.json");
    EXPECT_EQ(c.runs_root, "runs");
    EXPECT_EQ(c.rounds, 4);
    EXPECT_DOUBLE_EQ(c.generation.sampling.temperature, 0.8);
    EXPECT_EQ(c.generation.sampling.k, 10);
    EXPECT_EQ(c.eval.subset_size, 500);
    EXPECT_EQ(c.eval.k_list, (std::vector<int>{1, 20}));
    EXPECT_DOUBLE_EQ(c.eval.temperature, 0.7);
    EXPECT_EQ(c.eval.split, Split::Test);
    EXPECT_EQ(c.prune.mode, pruner::PruneMode::Full);
    EXPECT_EQ(c.curation.target_size, 2000);
    EXPECT_EQ(c.curation.per_question_cap, 1);
}

TEST(RunConfigTest, CodeKindCurationDefault) {
    auto doc = minimal();
    doc["problems"]["kind"] = "code";
    EXPECT_EQ(run_config_from_json(doc, "/").curation.target_size, 1000);
}

TEST(RunConfigTest, SeedFlowsIntoSamplingAndCuration) {
    auto doc = minimal();
    doc["seed"] = 77;
    const auto c = run_config_from_json(doc, "/");
    EXPECT_EQ(c.generation.sampling.seed, 77);
    EXPECT_EQ(c.curation.seed, 77);
}

TEST(RunConfigTest, CurationIsPatchedOverDefaults) {
    auto doc = minimal();
    doc["curation"] = {{"target_size", 50}, {"accumulate", true}};
    const auto c = run_config_from_json(doc, "/");
    EXPECT_EQ(c.curation.target_size, 50);
    EXPECT_TRUE(c.curation.accumulate);
    EXPECT_EQ(c.curation.per_question_cap, 1);
}

TEST(RunConfigTest, Overrides) {
    auto doc = minimal();
    apply_overrides(doc, {"rounds=2", "generation.k=4", "prune.mode=softpos", "run_id=abc", "eval.k_list=[1,5]"});
    const auto c = run_config_from_json(doc, "/");
    EXPECT_EQ(c.rounds, 2);
    EXPECT_EQ(c.generation.sampling.k, 4);
    EXPECT_EQ(c.prune.mode, pruner::PruneMode::SoftPos);
    EXPECT_EQ(c.run_id, "abc");
    EXPECT_EQ(c.eval.k_list, (std::vector<int>{1, 5}));
    EXPECT_THROW(apply_overrides(doc, {"noequals"}), ConfigError);
    EXPECT_THROW(apply_overrides(doc, {"a..b=1"}), ConfigError);
    EXPECT_THROW(apply_overrides(doc, {"rounds.x=1"}), ConfigError);
}

TEST(RunConfigTest, InvalidValuesAreConfigErrors) {
    const std::vector<std::pair<std::string, json>> bad{
        {"rounds", 0},
        {"verify_threads", 0},
        {"generation", {{"temperature", 3.0}}},
        {"generation", {{"k", 0}}},
        {"eval", {{"k_list", {1, 50}}}},
        {"prune", {{"mode", "everything"}}},
        {"curation", {{"target_size", 0}}},
        {"trainer", {{"hook", json::array()}}},
        {"rounds", "four"},
    };
    for (const auto& [key, value] : bad) {
        auto doc = minimal();
        doc[key] = value;
        EXPECT_THROW(run_config_from_json(doc, "/"), ConfigError) << key << "=" << value.dump();
    }
    EXPECT_THROW(run_config_from_json(json{{"problems", {{"path", "x"}}}}, "/"), ConfigError);
    EXPECT_THROW(run_config_from_json(json::object(), "/"), ConfigError);
}

TEST(RunConfigTest, JsonRoundTripPreservesSnapshot) {
    auto doc = minimal();
    doc["trainer"] = {{"learning_rate", 2e-6}, {"extra", {{"simulator", {{"eta_down", 0.1}}}}}};
    doc["eval"] = {{"subset_seed", 5}};
    const auto c = run_config_from_json(doc, "/cfg");
    const auto again = run_config_from_json(run_config_to_json(c), "/elsewhere");
    EXPECT_EQ(config_snapshot(again), config_snapshot(c));
    EXPECT_EQ(again.run_id, c.run_id);
    EXPECT_FALSE(config_snapshot(c).contains("run_id"));
    EXPECT_FALSE(config_snapshot(c).contains("runs_root"));
}

TEST(RunConfigTest, LoadResolvesAgainstConfigDirectory) {
    testkit::TempDir tmp;
    testkit::spit(tmp / "sub/run.json", minimal().dump());
    const auto c = load_run_config(tmp / "sub/run.json", {"runs_root=out"});
    EXPECT_EQ(c.problems_path, tmp / "sub/data/problems.jsonl");
    EXPECT_EQ(c.runs_root, tmp / "sub/out");
    testkit::spit(tmp / "broken.json", "{");
    EXPECT_THROW(load_run_config(tmp / "broken.json"), ConfigError);
    EXPECT_THROW(load_run_config(tmp / "missing.json"), ConfigError);
}
