#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tpt/error.hpp"
#include "tpt/types.hpp"

namespace tpt::generator {

// Chain-of-thought prompt. `requirements_block` may contain the placeholder
// "{marker}" which is replaced by `answer_format_marker` when rendering.
struct PromptTemplate {
    std::string system_preamble;
    std::string task_intro;
    std::string requirements_block;
    std::string answer_format_marker = "#### ";

    static PromptTemplate math();
    static PromptTemplate code(std::string language = "python");
    static PromptTemplate for_kind(TaskKind kind);

    // The instruction line that tells the model how to format its answer.
    std::string format_instruction() const;
};

struct RenderedPrompt {
    std::string system;
    std::string user;

    std::string full() const { return system + "\n\n" + user; }
};

RenderedPrompt render_messages(const PromptTemplate& tmpl, const ProblemSpec& problem);
std::string render_prompt(const PromptTemplate& tmpl, const ProblemSpec& problem);

struct SamplingParams {
    double temperature = 0.8;
    int k = 10;
    int max_tokens = 1024;
    std::int64_t seed = 0;

    static SamplingParams generation_defaults() { return {}; }
    static SamplingParams evaluation_defaults() { return {0.7, 20, 1024, 0}; }
    // Throws ConfigError when out of range.
    void validate() const;
};

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 500;
    // Injected for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;

    // Delay before retry number `retry` (1-based): base * 2^(retry-1).
    std::chrono::milliseconds delay_before_retry(int retry) const;
};

struct CompletionRequest {
    std::string model_name;
    std::string problem_id;
    int sample_index = 0;
    std::string system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 0;
    std::int64_t seed = 0;
};

struct Completion {
    std::string text;
    bool truncated = false;
};

// Raised by backends for failed or malformed requests; retried by the sampler.
class BackendError : public Error {
public:
    using Error::Error;
};

// Implementations must be safe to call from several threads at once.
class InferenceBackend {
public:
    virtual ~InferenceBackend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

struct GenerationOptions {
    int round = 0;
    // Seeds for generation and evaluation streams are kept apart by purpose.
    std::string purpose = "generate";
    int max_in_flight = 8;
    RetryPolicy retry;
};

struct GenerationResult {
    // Ordered by (problem order, sample index); failed samples are absent.
    std::vector<SolutionRecord> records;
    std::vector<GenerationFailure> failures;
    // problem id -> number of samples missing after retries.
    std::map<std::string, int> shortfall;
};

// Draws params.k samples per problem. Never throws for request failures:
// they are retried per `options.retry` and then reported in `failures`.
GenerationResult sample_solutions(InferenceBackend& backend, const ModelRef& model,
                                  std::span<const ProblemSpec> problems, const SamplingParams& params,
                                  const PromptTemplate& tmpl, const GenerationOptions& options);

}  // namespace tpt::generator
