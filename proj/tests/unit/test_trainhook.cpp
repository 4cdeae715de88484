#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tpt/curator.hpp"
#include "tpt/dataset_io.hpp"
#include "tpt/digest.hpp"
#include "tpt/error.hpp"
#include "tpt/simbackend.hpp"
#include "tpt/trainhook.hpp"

using namespace tpt;
using namespace tpt::trainhook;
namespace fs = std::filesystem;

namespace {

curator::CuratedDataset dataset_with_digest(std::string digest) {
    curator::CuratedDataset ds;
    ds.digest = std::move(digest);
    return ds;
}

const ModelRef kGemma{"gemma-2b", ModelKind::Endpoint, ModelFamily::GemmaLike, "http://x"};
const ModelRef kLlama{"llama-1b", ModelKind::Endpoint, ModelFamily::LlamaLike, "http://x"};

// Simulated base model plus a written dataset in `dir`.
struct SimJob {
    ModelRef model;
    curator::CuratedDataset dataset;
    fs::path dataset_path;
};

SimJob make_sim_job(const fs::path& dir) {
    const auto problems = sim::synthetic_problems(4, 0, 1);
    sim::save_state(sim::init_state(problems, 0.4, 4, 1), dir / "m0.state.json");
    curator::CuratedDataset ds;
    for (const auto& p : problems) {
        ds.pairs.push_back({p.id, "q", "work\n#### " + p.final_answer(), 0, curator::PairOrigin::Synthetic});
    }
    write_dataset(ds, dir / "data.jsonl");
    return {ModelRef{"m0", ModelKind::Simulated, ModelFamily::Other, (dir / "m0.state.json").string()}, ds,
            dir / "data.jsonl"};
}

Overrides lr() {
    Overrides o;
    o.learning_rate = 1e-5;
    return o;
}

}  // namespace

TEST(Hyperparameters, FamilyDefaults) {
    const auto g = family_defaults(ModelFamily::GemmaLike);
    EXPECT_DOUBLE_EQ(g.learning_rate, 1e-6);
    EXPECT_EQ(g.optimizer, "adamw-default-decay");
    EXPECT_EQ(g.epochs, 1);
    EXPECT_DOUBLE_EQ(g.warmup_ratio, 0.1);
    EXPECT_DOUBLE_EQ(family_defaults(ModelFamily::LlamaLike).learning_rate, 1e-5);
}

TEST(BuildJobSpec, DefaultsAndOverrides) {
    const auto spec = build_job_spec(kGemma, dataset_with_digest("abc"), "data.jsonl", 2);
    EXPECT_DOUBLE_EQ(spec.hyperparameters.learning_rate, 1e-6);
    EXPECT_EQ(spec.output_name, "gemma-2b-r2");
    EXPECT_EQ(spec.dataset_digest, "abc");
    EXPECT_EQ(spec.round, 2);

    Overrides o;
    o.learning_rate = 3e-6;
    o.batch_size = 8;
    o.output_name = "custom";
    const auto s2 = build_job_spec(kLlama, dataset_with_digest("abc"), "d", 1, o);
    EXPECT_DOUBLE_EQ(s2.hyperparameters.learning_rate, 3e-6);
    EXPECT_EQ(s2.hyperparameters.batch_size, 8);
    EXPECT_EQ(s2.output_name, "custom");
}

TEST(BuildJobSpec, Errors) {
    EXPECT_THROW(build_job_spec(kGemma, dataset_with_digest(""), "d", 1), ValidationError);
    const ModelRef other{"m", ModelKind::Endpoint, ModelFamily::Other, "http://x"};
    EXPECT_THROW(build_job_spec(other, dataset_with_digest("abc"), "d", 1), ConfigError);
    Overrides bad;
    bad.warmup_ratio = 1.0;
    EXPECT_THROW(build_job_spec(kGemma, dataset_with_digest("abc"), "d", 1, bad), ConfigError);
}

TEST(BuildJobSpec, OutputNames) {
    EXPECT_EQ(default_output_name("gemma-2b", 1), "gemma-2b-r1");
    EXPECT_EQ(default_output_name("gemma-2b-r1", 2), "gemma-2b-r2");
    EXPECT_EQ(default_output_name("gemma-r2b", 3), "gemma-r2b-r3");
}

TEST(BuildJobSpec, JsonRoundTrip) {
    auto spec = build_job_spec(kGemma, dataset_with_digest("abc"), "d", 1);
    spec.extra = nlohmann::json{{"simulator", {{"eta_up", 0.5}}}};
    EXPECT_EQ(nlohmann::json(spec).get<TrainJobSpec>(), spec);
}

TEST(InvokeTrainer, StubHookProducesNextModel) {
    testkit::TempDir tmp;
    const auto job = make_sim_job(tmp.path());
    const auto spec = build_job_spec(job.model, job.dataset, job.dataset_path.string(), 1, lr());
    const std::vector<std::string> hook{testkit::stub_trainer().string()};
    const auto result = invoke_trainer(spec, tmp / "train/spec.json", hook);
    ASSERT_EQ(result.status, TrainerStatus::Succeeded);
    EXPECT_EQ(result.exit_code, 0);
    ASSERT_TRUE(result.output_model);
    EXPECT_EQ(result.output_model->name, "m0-r1");
    EXPECT_EQ(result.output_model->uri, "m0-r1.state.json");
    const auto trained = sim::load_state(tmp / "train/m0-r1.state.json");
    EXPECT_EQ(trained.version, 1);
    EXPECT_TRUE(fs::exists(tmp / "train/train.log"));
    EXPECT_NE(testkit::slurp(tmp / "train/train.log").find("m0 -> m0-r1"), std::string::npos);
}

TEST(InvokeTrainer, NonZeroExitIsFailureAndStaleRefIgnored) {
    testkit::TempDir tmp;
    testkit::spit(tmp / "fail.sh", "#!/bin/sh\necho boom >&2\nexit 1\n", true);
    testkit::spit(tmp / "job/model_ref.out", R"({"name":"stale","kind":"simulated","uri":"x"})");
    const auto spec = build_job_spec(kGemma, dataset_with_digest("abc"), "d", 1);
    const std::vector<std::string> hook{(tmp / "fail.sh").string()};
    const auto result = invoke_trainer(spec, tmp / "job/spec.json", hook);
    EXPECT_EQ(result.status, TrainerStatus::Failed);
    EXPECT_EQ(result.exit_code, 1);
    EXPECT_FALSE(result.output_model);
    EXPECT_FALSE(fs::exists(tmp / "job/model_ref.out"));
    EXPECT_NE(testkit::slurp(result.log_path).find("boom"), std::string::npos);
}

TEST(InvokeTrainer, ExitZeroWithoutModelRefIsProtocolError) {
    testkit::TempDir tmp;
    testkit::spit(tmp / "silent.sh", "#!/bin/sh\nexit 0\n", true);
    testkit::spit(tmp / "garbage.sh", "#!/bin/sh\necho 'not json' > \"$(dirname \"$1\")/model_ref.out\"\n", true);
    const auto spec = build_job_spec(kGemma, dataset_with_digest("abc"), "d", 1);
    EXPECT_THROW(invoke_trainer(spec, tmp / "a/spec.json", std::vector<std::string>{(tmp / "silent.sh").string()}),
                 ProtocolError);
    EXPECT_THROW(invoke_trainer(spec, tmp / "b/spec.json", std::vector<std::string>{(tmp / "garbage.sh").string()}),
                 ProtocolError);
}

TEST(InvokeTrainer, MissingHookIsConfigError) {
    testkit::TempDir tmp;
    const auto spec = build_job_spec(kGemma, dataset_with_digest("abc"), "d", 1);
    EXPECT_THROW(invoke_trainer(spec, tmp / "spec.json", std::vector<std::string>{"/no/such/trainer"}), ConfigError);
    EXPECT_THROW(invoke_trainer(spec, tmp / "spec.json", std::vector<std::string>{}), ConfigError);
}

TEST(InvokeTrainer, HookReceivesSpecPathAsLastArgument) {
    testkit::TempDir tmp;
    testkit::spit(tmp / "argv.sh",
                  "#!/bin/sh\n"
                  "d=$(dirname \"$2\")\n"
                  "printf '%s|%s' \"$1\" \"$2\" > \"$d/args.txt\"\n"
                  "printf '{\"name\":\"out\",\"kind\":\"endpoint\",\"family\":\"gemma-like\",\"uri\":\"http://y\"}' "
                  "> \"$d/model_ref.out\"\n",
                  true);
    const auto spec = build_job_spec(kGemma, dataset_with_digest("abc"), "d", 1);
    const std::vector<std::string> hook{(tmp / "argv.sh").string(), "--mode=real"};
    const auto result = invoke_trainer(spec, tmp / "w/spec.json", hook);
    ASSERT_EQ(result.status, TrainerStatus::Succeeded);
    EXPECT_EQ(result.output_model->uri, "http://y");
    EXPECT_EQ(testkit::slurp(tmp / "w/args.txt"), "--mode=real|" + (tmp / "w/spec.json").string());
    EXPECT_EQ(read_json_file(tmp / "w/spec.json").get<TrainJobSpec>(), spec);
}

TEST(Registry, AppendOnlyChain) {
    const ModelRef m0{"m0", ModelKind::Simulated, ModelFamily::Other, "a"};
    const ModelRef m1{"m1", ModelKind::Simulated, ModelFamily::Other, "b"};
    const ModelRef m2{"m2", ModelKind::Simulated, ModelFamily::Other, "c"};
    ModelRegistry reg;
    reg.append({1, m1, m0, "d1"});
    reg.append({2, m2, m1, "d2"});
    EXPECT_EQ(reg.last_round(), 2);
    EXPECT_THROW(reg.append({4, m2, m2, "d"}), ValidationError);
    EXPECT_THROW(reg.append({3, m2, m0, "d"}), ValidationError);
    EXPECT_THROW(ModelRegistry{}.append({2, m1, m0, "d"}), ValidationError);
    const auto j = nlohmann::json(reg);
    ASSERT_TRUE(j.is_array());
    EXPECT_EQ(j.size(), 2u);
}

TEST(Registry, RegisterRequiresSuccess) {
    const ModelRef m0{"m0", ModelKind::Simulated, ModelFamily::Other, "a"};
    TrainerResult ok;
    ok.status = TrainerStatus::Succeeded;
    ok.output_model = ModelRef{"m1", ModelKind::Simulated, ModelFamily::Other, "b"};
    const auto reg = register_model({}, 1, ok, m0, "digest");
    ASSERT_EQ(reg.entries().size(), 1u);
    EXPECT_EQ(reg.entries()[0].job_digest, "digest");
    TrainerResult bad;
    EXPECT_THROW(register_model(reg, 2, bad, *ok.output_model, "x"), ValidationError);
}
