#include "tpt/generator.hpp"

#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "tpt/keyed_rng.hpp"
#include "tpt/text.hpp"

namespace tpt::generator {

PromptTemplate PromptTemplate::math() {
    PromptTemplate t;
    t.system_preamble = "You are an expert mathematician.";
    t.task_intro =
        "You are provided with a math problem.\n"
        "Your task is to solve the problem step-by-step, clearly showing all relevant calculations and reasoning.";
    t.requirements_block =
        "1. Provide a complete and correct solution in a markdown block.\n"
        "2. Explain each step of the solution in detail.\n"
        "3. Conclude with the final numerical answer on a new line in the format {marker}[Answer], replacing "
        "[Answer] with the actual answer.";
    return t;
}

PromptTemplate PromptTemplate::code(std::string language) {
    PromptTemplate t;
    t.system_preamble = "You are an expert competitive programmer.";
    t.task_intro =
        "You are provided with a programming problem.\n"
        "Your task is to write a program that solves it, reading from standard input and writing to standard "
        "output.";
    t.requirements_block = fmt::format(
        "1. Explain your approach step-by-step before writing code.\n"
        "2. Provide the complete program in a single fenced code block starting with ```{}.\n"
        "3. The program must read all input from standard input and print only the answer to standard output.",
        language);
    t.answer_format_marker = "```";
    return t;
}

PromptTemplate PromptTemplate::for_kind(TaskKind kind) { return kind == TaskKind::Math ? math() : code(); }

std::string PromptTemplate::format_instruction() const {
    // For templates without the placeholder the whole block is the contract.
    if (requirements_block.find("{marker}") == std::string::npos) return requirements_block;
    return answer_format_marker + "[Answer]";
}

RenderedPrompt render_messages(const PromptTemplate& tmpl, const ProblemSpec& problem) {
    const auto requirements = text::replace_all(tmpl.requirements_block, "{marker}", tmpl.answer_format_marker);
    RenderedPrompt out;
    out.system = tmpl.system_preamble;
    out.user = fmt::format("{}\n\nProblem:\n\"{}\"\n\nRequirements:\n{}\n\nSolution:", tmpl.task_intro,
                           problem.prompt_body, requirements);
    return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const ProblemSpec& problem) {
    return render_messages(tmpl, problem).full();
}

void SamplingParams::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ConfigError(fmt::format("temperature {} outside [0, 2]", temperature));
    }
    if (k < 1) throw ConfigError(fmt::format("k must be >= 1, got {}", k));
    if (max_tokens < 1) throw ConfigError(fmt::format("max_tokens must be >= 1, got {}", max_tokens));
}

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry) const {
    if (retry < 1) return std::chrono::milliseconds(0);
    return std::chrono::milliseconds(static_cast<std::int64_t>(backoff_base_ms) << (retry - 1));
}

GenerationResult sample_solutions(InferenceBackend& backend, const ModelRef& model,
                                  std::span<const ProblemSpec> problems, const SamplingParams& params,
                                  const PromptTemplate& tmpl, const GenerationOptions& options) {
    params.validate();
    if (options.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (options.retry.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");

    std::vector<RenderedPrompt> prompts;
    prompts.reserve(problems.size());
    for (const auto& p : problems) prompts.push_back(render_messages(tmpl, p));

    const std::size_t k = static_cast<std::size_t>(params.k);
    const std::size_t total = problems.size() * k;
    std::vector<std::optional<SolutionRecord>> slots(total);
    std::vector<std::optional<GenerationFailure>> failed(total);

    auto sleep = options.retry.sleep ? options.retry.sleep
                                     : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t idx = next.fetch_add(1); idx < total; idx = next.fetch_add(1)) {
            const auto& problem = problems[idx / k];
            const int sample = static_cast<int>(idx % k);
            CompletionRequest req;
            req.model_name = model.name;
            req.problem_id = problem.id;
            req.sample_index = sample;
            req.system = prompts[idx / k].system;
            req.user = prompts[idx / k].user;
            req.temperature = params.temperature;
            req.max_tokens = params.max_tokens;
            req.seed = derive_sample_seed(params.seed, options.purpose, options.round, problem.id, sample);

            std::string last_error;
            int attempt = 1;
            for (; attempt <= options.retry.max_attempts; ++attempt) {
                if (attempt > 1) sleep(options.retry.delay_before_retry(attempt - 1));
                try {
                    auto completion = backend.complete(req);
                    SolutionRecord rec;
                    rec.problem_id = problem.id;
                    rec.model_ref = model.name;
                    rec.round = options.round;
                    rec.sample_index = sample;
                    rec.text = std::move(completion.text);
                    rec.truncated = completion.truncated;
                    rec.sampling = {params.temperature, req.seed};
                    slots[idx] = std::move(rec);
                    break;
                } catch (const std::exception& e) {
                    last_error = e.what();
                }
            }
            if (!slots[idx]) {
                failed[idx] = GenerationFailure{problem.id, sample, options.retry.max_attempts, last_error};
            }
        }
    };

    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight), total);
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    pool.clear();

    GenerationResult result;
    result.records.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        if (slots[idx]) {
            result.records.push_back(std::move(*slots[idx]));
        } else if (failed[idx]) {
            result.shortfall[failed[idx]->problem_id] += 1;
            result.failures.push_back(std::move(*failed[idx]));
        }
    }
    return result;
}

}  // namespace tpt::generator
