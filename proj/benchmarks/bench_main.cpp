#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tpt/curator.hpp"
#include "tpt/digest.hpp"
#include "tpt/evalkit.hpp"
#include "tpt/gradlab.hpp"
#include "tpt/pruner.hpp"
#include "tpt/simbackend.hpp"

using namespace tpt;

namespace {

void BM_PassAtK(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        double sum = 0.0;
        for (int c = 0; c <= n; ++c) sum += evalkit::pass_at_k(n, c, n / 2);
        benchmark::DoNotOptimize(sum);
    }
}
BENCHMARK(BM_PassAtK)->Arg(20)->Arg(200)->Arg(2000);

void BM_ExtractFinalAnswer(benchmark::State& state) {
    std::string text;
    for (int i = 0; i < state.range(0); ++i) text += "Step " + std::to_string(i) + ": 12 + 26 = 38, carry on.\n";
    text += "**#### 38**\n";
    for (auto _ : state) benchmark::DoNotOptimize(pruner::extract_final_answer(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ExtractFinalAnswer)->Arg(4)->Arg(64)->Arg(1024);

std::vector<SolutionRecord> sim_records(int problems, int k) {
    const auto specs = sim::synthetic_problems(problems, 0, 1);
    const auto model = sim::init_state(specs, 0.5, 8, 1);
    std::vector<SolutionRecord> out;
    for (const auto& p : specs) {
        for (int i = 0; i < k; ++i) out.push_back(sim::sim_generate(model, p, {0.8, 1}, i, "m", 0));
    }
    return out;
}

void BM_CurateDataset(benchmark::State& state) {
    const auto records = sim_records(static_cast<int>(state.range(0)), 10);
    curator::CurationPolicy policy;
    policy.target_size = static_cast<int>(state.range(0)) / 2;
    const curator::PromptLookup prompt = [](const std::string& id) { return "prompt for " + id; };
    for (auto _ : state) {
        const auto unique = curator::dedupe(records);
        benchmark::DoNotOptimize(curator::sample_dataset(unique, policy, 1, prompt));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_CurateDataset)->Arg(100)->Arg(2000);

void BM_Sha256(benchmark::State& state) {
    const std::string data(static_cast<std::size_t>(state.range(0)), 'x');
    for (auto _ : state) benchmark::DoNotOptimize(sha256_hex(data));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Sha256)->Arg(1 << 10)->Arg(1 << 20);

void BM_PolicyGradient(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const auto policy = gradlab::TabularPolicy::random(static_cast<int>(state.range(0)), 16, rng);
    std::vector<gradlab::Trajectory> trajs;
    for (int i = 0; i < 32; ++i) trajs.push_back(gradlab::random_trajectory(policy, 32, rng, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(gradlab::pg_gradient(policy, trajs));
}
BENCHMARK(BM_PolicyGradient)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
