#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "test_support.hpp"
#include "tpt/dataset_io.hpp"
#include "tpt/error.hpp"
#include "tpt/generator.hpp"

using namespace tpt;
using namespace tpt::generator;
using namespace std::chrono_literals;

namespace {

std::vector<ProblemSpec> problems(int n) {
    std::vector<ProblemSpec> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(ProblemSpec{"p" + std::to_string(i), "body " + std::to_string(i), FinalAnswer{"1"}, Split::Train});
    }
    return out;
}

const ModelRef kModel{"fake", ModelKind::Endpoint, ModelFamily::Other, "http://unused"};

// Echoes request identity and tracks how many calls overlap.
class InstrumentedBackend : public InferenceBackend {
public:
    Completion complete(const CompletionRequest& r) override {
        const int now = ++in_flight_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(2ms);
        {
            std::lock_guard lock(mu_);
            seeds_.insert(r.seed);
            ++calls_;
        }
        --in_flight_;
        return {r.problem_id + "/" + std::to_string(r.sample_index) + "\n#### 1", false};
    }
    int peak() const { return peak_.load(); }
    int calls() const { return calls_; }
    std::size_t distinct_seeds() const { return seeds_.size(); }

private:
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
    std::mutex mu_;
    std::set<std::int64_t> seeds_;
    int calls_ = 0;
};

// Fails the first `failures` attempts for every (problem, sample) listed.
class FlakyBackend : public InferenceBackend {
public:
    FlakyBackend(int failures, std::set<std::string> flaky) : failures_(failures), flaky_(std::move(flaky)) {}
    Completion complete(const CompletionRequest& r) override {
        const auto key = r.problem_id + "#" + std::to_string(r.sample_index);
        std::lock_guard lock(mu_);
        if (flaky_.count(key) && attempts_[key]++ < failures_) throw BackendError("HTTP 503 from " + key);
        return {"ok\n#### 1", false};
    }

private:
    int failures_;
    std::set<std::string> flaky_;
    std::mutex mu_;
    std::map<std::string, int> attempts_;
};

}  // namespace

TEST(PromptTemplate, MathPromptRendersTheFixedTemplate) {
    const auto ps = load_problems(testkit::fixture("problems/stamps.jsonl"), TaskKind::Math);
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_EQ(render_prompt(PromptTemplate::math(), ps[0]), testkit::slurp(testkit::fixture("prompts/stamps_math.txt")));
}

TEST(PromptTemplate, MessagesSplitSystemFromUser) {
    const auto ps = problems(1);
    const auto m = render_messages(PromptTemplate::math(), ps[0]);
    EXPECT_EQ(m.system, "You are an expert mathematician.");
    EXPECT_EQ(m.user.find("You are provided with a math problem."), 0u);
    EXPECT_NE(m.user.find("Problem:\n\"body 0\""), std::string::npos);
    EXPECT_TRUE(m.user.ends_with("Solution:"));
    EXPECT_EQ(m.full(), render_prompt(PromptTemplate::math(), ps[0]));
}

TEST(PromptTemplate, MarkerIsConfigurable) {
    auto t = PromptTemplate::math();
    t.answer_format_marker = "ANSWER: ";
    const auto user = render_messages(t, problems(1)[0]).user;
    EXPECT_NE(user.find("in the format ANSWER: [Answer]"), std::string::npos);
    EXPECT_EQ(t.format_instruction(), "ANSWER: [Answer]");
    EXPECT_EQ(PromptTemplate::code().answer_format_marker, "```");
}

TEST(SamplingParams, DefaultsAndValidation) {
    const auto g = SamplingParams::generation_defaults();
    EXPECT_DOUBLE_EQ(g.temperature, 0.8);
    EXPECT_EQ(g.k, 10);
    EXPECT_DOUBLE_EQ(SamplingParams::evaluation_defaults().temperature, 0.7);
    EXPECT_THROW((SamplingParams{2.5, 10, 10, 0}.validate()), ConfigError);
    EXPECT_THROW((SamplingParams{0.8, 0, 10, 0}.validate()), ConfigError);
}

TEST(SampleSolutions, ProducesKRecordsPerProblemInOrder) {
    InstrumentedBackend backend;
    const auto ps = problems(7);
    SamplingParams params;
    params.k = 10;
    params.seed = 5;
    GenerationOptions opts;
    opts.round = 2;
    const auto result = sample_solutions(backend, kModel, ps, params, PromptTemplate::math(), opts);
    ASSERT_EQ(result.records.size(), 70u);
    EXPECT_TRUE(result.failures.empty());
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const auto& r = result.records[i];
        EXPECT_EQ(r.problem_id, ps[i / 10].id);
        EXPECT_EQ(r.sample_index, static_cast<int>(i % 10));
        EXPECT_EQ(r.round, 2);
        EXPECT_EQ(r.model_ref, "fake");
        EXPECT_EQ(r.text, r.problem_id + "/" + std::to_string(r.sample_index) + "\n#### 1");
        EXPECT_DOUBLE_EQ(r.sampling.temperature, 0.8);
    }
    EXPECT_EQ(backend.distinct_seeds(), 70u);
}

TEST(SampleSolutions, NeverExceedsMaxInFlight) {
    for (int limit : {1, 3, 8}) {
        InstrumentedBackend backend;
        GenerationOptions opts;
        opts.max_in_flight = limit;
        SamplingParams params;
        params.k = 8;
        sample_solutions(backend, kModel, problems(6), params, PromptTemplate::math(), opts);
        EXPECT_EQ(backend.calls(), 48);
        EXPECT_LE(backend.peak(), limit);
        if (limit > 1) EXPECT_GT(backend.peak(), 1);
    }
}

TEST(SampleSolutions, SeedsDependOnlyOnIdentity) {
    InstrumentedBackend a;
    InstrumentedBackend b;
    SamplingParams params;
    params.k = 3;
    params.seed = 9;
    GenerationOptions one;
    one.max_in_flight = 1;
    GenerationOptions many;
    many.max_in_flight = 8;
    const auto ra = sample_solutions(a, kModel, problems(5), params, PromptTemplate::math(), one);
    const auto rb = sample_solutions(b, kModel, problems(5), params, PromptTemplate::math(), many);
    EXPECT_EQ(ra.records, rb.records);
}

TEST(SampleSolutions, RetriesWithExponentialBackoff) {
    FlakyBackend backend(2, {"p1#0"});
    std::vector<std::chrono::milliseconds> sleeps;
    std::mutex mu;
    GenerationOptions opts;
    opts.retry.max_attempts = 3;
    opts.retry.backoff_base_ms = 500;
    opts.retry.sleep = [&](std::chrono::milliseconds d) {
        std::lock_guard lock(mu);
        sleeps.push_back(d);
    };
    SamplingParams params;
    params.k = 2;
    const auto result = sample_solutions(backend, kModel, problems(3), params, PromptTemplate::math(), opts);
    EXPECT_EQ(result.records.size(), 6u);
    EXPECT_TRUE(result.failures.empty());
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_EQ(sleeps[0], 500ms);
    EXPECT_EQ(sleeps[1], 1000ms);
}

TEST(SampleSolutions, ExhaustedRetriesAreReportedNotThrown) {
    FlakyBackend backend(100, {"p0#1", "p2#0"});
    GenerationOptions opts;
    opts.retry.max_attempts = 3;
    opts.retry.sleep = [](std::chrono::milliseconds) {};
    SamplingParams params;
    params.k = 2;
    const auto result = sample_solutions(backend, kModel, problems(3), params, PromptTemplate::math(), opts);
    EXPECT_EQ(result.records.size(), 4u);
    ASSERT_EQ(result.failures.size(), 2u);
    EXPECT_EQ(result.failures[0].problem_id, "p0");
    EXPECT_EQ(result.failures[0].sample_index, 1);
    EXPECT_EQ(result.failures[0].attempts, 3);
    EXPECT_NE(result.failures[0].message.find("503"), std::string::npos);
    EXPECT_EQ(result.shortfall.at("p0"), 1);
    EXPECT_EQ(result.shortfall.at("p2"), 1);
}

TEST(RetryPolicy, DelaySchedule) {
    RetryPolicy p;
    p.backoff_base_ms = 100;
    EXPECT_EQ(p.delay_before_retry(1), 100ms);
    EXPECT_EQ(p.delay_before_retry(2), 200ms);
    EXPECT_EQ(p.delay_before_retry(4), 800ms);
}
