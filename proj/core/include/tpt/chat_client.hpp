#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tpt/generator.hpp"

namespace tpt::generator {

struct EndpointOptions {
    // Name of the environment variable holding the bearer token; unset or
    // empty variable means no Authorization header.
    std::string api_key_env = "TPT_API_KEY";
    std::string path = "/v1/chat/completions";
    int connect_timeout_ms = 10'000;
    int read_timeout_ms = 300'000;
};

// Chat-completions-compatible HTTP backend. The base address may carry a
// path prefix ("http://host:8000/proxy"); `options.path` is appended to it.
class ChatEndpointBackend final : public InferenceBackend {
public:
    ChatEndpointBackend(std::string base_url, EndpointOptions options = {});
    Completion complete(const CompletionRequest& request) override;

    const std::string& origin() const noexcept { return origin_; }
    const std::string& request_path() const noexcept { return request_path_; }

private:
    std::string origin_;
    std::string request_path_;
    EndpointOptions options_;
};

nlohmann::json build_chat_request(const CompletionRequest& request);
// Throws BackendError if the body is not a usable chat-completions response.
Completion parse_chat_response(const std::string& body);

}  // namespace tpt::generator
