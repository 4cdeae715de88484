#include <gtest/gtest.h>

#include <chrono>

#include "test_support.hpp"
#include "tpt/error.hpp"
#include "tpt/process.hpp"
#include "tpt/pruner.hpp"
#include "tpt/sandbox.hpp"

using namespace tpt;
using namespace tpt::pruner;

namespace {

std::vector<TestCase> doubling_tests() {
    return {TestCase{"1\n", "2\n", {}}, TestCase{"2\n", "4\n", {}}, TestCase{"3\n", "6\n", {}}};
}

std::string program(const std::string& name) { return testkit::slurp(testkit::fixture("programs/" + name)); }

}  // namespace

TEST(OutputsMatch, TrailingWhitespaceRule) {
    EXPECT_TRUE(outputs_match("4\n", "4\n"));
    EXPECT_TRUE(outputs_match("4", "4\n"));
    EXPECT_TRUE(outputs_match("4  \n5\t\n", "4\n5\n"));
    EXPECT_FALSE(outputs_match("4\n\n\n", "4\n"));
    EXPECT_FALSE(outputs_match(" 4\n", "4\n"));
    EXPECT_FALSE(outputs_match("4 \n", "4\n", true));
    EXPECT_TRUE(outputs_match("4\n", "4\n", true));
}

TEST(VerdictFromOutcomes, AllSomeNone) {
    using S = ExecStatus;
    const std::vector<ExecOutcome> all{{0, S::Pass, 1}, {1, S::Pass, 1}};
    const std::vector<ExecOutcome> some{{0, S::Pass, 1}, {1, S::Timeout, 1}};
    const std::vector<ExecOutcome> none{{0, S::WrongOutput, 1}, {1, S::RuntimeError, 1}};
    EXPECT_EQ(verdict_from_outcomes(all, 2), Verdict::Correct);
    EXPECT_EQ(verdict_from_outcomes(some, 2), Verdict::SoftCorrect);
    EXPECT_EQ(verdict_from_outcomes(none, 2), Verdict::Incorrect);
    EXPECT_EQ(verdict_from_outcomes({}, 2), Verdict::Error);
    EXPECT_EQ(verdict_from_outcomes(all, 3), Verdict::Error);
}

TEST(JudgeCode, AllTestsPass) {
    const auto r = judge_code(program("double.py"), doubling_tests(), {});
    EXPECT_EQ(r.verdict, Verdict::Correct);
    ASSERT_EQ(r.outcomes.size(), 3u);
    for (const auto& o : r.outcomes) EXPECT_EQ(o.status, ExecStatus::Pass);
}

TEST(JudgeCode, PartialPassIsSoftCorrect) {
    const auto r = judge_code(program("double_first_only.py"), doubling_tests(), {});
    EXPECT_EQ(r.verdict, Verdict::SoftCorrect);
    EXPECT_EQ(r.outcomes[0].status, ExecStatus::Pass);
    EXPECT_EQ(r.outcomes[1].status, ExecStatus::WrongOutput);
    EXPECT_TRUE(keeps(PruneMode::SoftPos, r.verdict));
    EXPECT_FALSE(keeps(PruneMode::Full, r.verdict));
}

TEST(JudgeCode, BusyLoopTimesOutPromptly) {
    std::vector<TestCase> tests{TestCase{"", "", TestLimits{1000, 1 << 20}}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = judge_code(program("busy_loop.py"), tests, {});
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(r.outcomes.size(), 1u);
    EXPECT_EQ(r.outcomes[0].status, ExecStatus::Timeout);
    EXPECT_EQ(r.verdict, Verdict::Incorrect);
    EXPECT_LT(ms, 1500);
}

TEST(JudgeCode, RuntimeErrorAndOverflow) {
    const auto crash = judge_code("raise SystemExit(3)\n", doubling_tests(), {});
    EXPECT_EQ(crash.verdict, Verdict::Incorrect);
    EXPECT_EQ(crash.outcomes[0].status, ExecStatus::RuntimeError);

    std::vector<TestCase> tests{TestCase{"", "x\n", TestLimits{5000, 1024}}};
    const auto flood = judge_code("while True:\n    print('x' * 100)\n", tests, {});
    EXPECT_EQ(flood.outcomes[0].status, ExecStatus::OutputOverflow);
}

TEST(JudgeCode, EachTestRunsInAFreshDirectory) {
    // A program that leaves a file behind fails if it sees it again.
    const std::string prog =
        "import os, sys\n"
        "if os.path.exists('state'):\n"
        "    print('stale'); sys.exit(0)\n"
        "open('state', 'w').write('x')\n"
        "print(int(input()) * 2)\n";
    EXPECT_EQ(judge_code(prog, doubling_tests(), {}).verdict, Verdict::Correct);
}

TEST(JudgeCode, RunnerOverridesPerTestLimits) {
    RunnerConfig runner;
    runner.wall_ms = 300;
    std::vector<TestCase> tests{TestCase{"", "", TestLimits{60000, 1 << 20}}};
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = judge_code(program("busy_loop.py"), tests, runner);
    EXPECT_EQ(r.outcomes[0].status, ExecStatus::Timeout);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));
}

TEST(JudgeCode, CompileStepForCompiledLanguages) {
    if (!find_executable("cc")) GTEST_SKIP() << "no C compiler";
    RunnerConfig runner;
    runner.file_name = "main.c";
    runner.compile_command = {"cc", "-O0", "-o", "{dir}/prog", "{file}"};
    runner.command = {"{dir}/prog"};
    const std::string src = "#include <stdio.h>\nint main(void){int n; if(scanf(\"%d\",&n)!=1) return 1; printf(\"%d\\n\", 2*n); return 0;}\n";
    EXPECT_EQ(judge_code(src, doubling_tests(), runner).verdict, Verdict::Correct);
    const auto broken = judge_code("int main( {", doubling_tests(), runner);
    EXPECT_EQ(broken.verdict, Verdict::Error);
    EXPECT_TRUE(broken.outcomes.empty());
}

TEST(JudgeCode, MissingRunnerIsSandboxError) {
    RunnerConfig runner;
    runner.command = {"definitely-not-python-xyz", "{file}"};
    EXPECT_THROW(judge_code("print(1)", doubling_tests(), runner), SandboxError);
}

TEST(AssignVerdicts, CodeRecordsAreJudged) {
    const std::vector<ProblemSpec> ps{ProblemSpec{"dbl", "double it", TestSuite{doubling_tests()}, Split::Train}};
    std::vector<SolutionRecord> records(3);
    records[0].text = "Plan.\n```python\n" + program("double.py") + "```\n";
    records[1].text = "```python\n" + program("double_first_only.py") + "```";
    records[2].text = "```python\nprint('nope')\n```";
    for (int i = 0; i < 3; ++i) {
        records[i].problem_id = "dbl";
        records[i].sample_index = i;
    }
    VerifyOptions opts;
    opts.threads = 3;
    assign_verdicts(records, index_problems(ps), opts);
    EXPECT_EQ(records[0].verdict, Verdict::Correct);
    EXPECT_EQ(records[1].verdict, Verdict::SoftCorrect);
    EXPECT_EQ(records[2].verdict, Verdict::Incorrect);
    ASSERT_TRUE(records[1].exec);
    EXPECT_EQ(records[1].exec->size(), 3u);
    for (const auto& r : records) EXPECT_EQ(recompute_verdict(r, ps[0]), *r.verdict);
}
