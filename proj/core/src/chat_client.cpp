#include "tpt/chat_client.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>

namespace tpt::generator {
using nlohmann::json;

ChatEndpointBackend::ChatEndpointBackend(std::string base_url, EndpointOptions options)
    : options_(std::move(options)) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError(fmt::format("endpoint '{}' has no scheme", base_url));
    const auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    request_path_ = prefix + options_.path;
}

json build_chat_request(const CompletionRequest& request) {
    return json{{"model", request.model_name},
                {"messages",
                 json::array({json{{"role", "system"}, {"content", request.system}},
                              json{{"role", "user"}, {"content", request.user}}})},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens},
                {"seed", request.seed},
                {"n", 1}};
}

Completion parse_chat_response(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw BackendError(fmt::format("response is not JSON: {}", e.what()));
    }
    const auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        throw BackendError("response has no choices");
    }
    const auto& choice = choices->front();
    const auto message = choice.find("message");
    if (message == choice.end() || !message->contains("content") || !(*message)["content"].is_string()) {
        throw BackendError("response choice has no message content");
    }
    Completion out;
    out.text = (*message)["content"].get<std::string>();
    if (auto fr = choice.find("finish_reason"); fr != choice.end() && fr->is_string()) {
        out.truncated = fr->get<std::string>() == "length";
    }
    return out;
}

Completion ChatEndpointBackend::complete(const CompletionRequest& request) {
    // httplib clients are not shareable across threads; one per request.
    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::milliseconds(options_.connect_timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.read_timeout_ms));
    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(request_path_, headers, build_chat_request(request).dump(), "application/json");
    if (!res) {
        throw BackendError(fmt::format("request to {}{} failed: {}", origin_, request_path_,
                                       httplib::to_string(res.error())));
    }
    if (res->status != 200) {
        throw BackendError(fmt::format("endpoint returned HTTP {}: {}", res->status, res->body.substr(0, 200)));
    }
    return parse_chat_response(res->body);
}

}  // namespace tpt::generator
