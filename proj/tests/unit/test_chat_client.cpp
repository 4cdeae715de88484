#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "tpt/chat_client.hpp"
#include "tpt/error.hpp"

using namespace tpt;
using namespace tpt::generator;
using nlohmann::json;

namespace {

// Minimal chat-completions server on an ephemeral port.
class FakeEndpoint {
public:
    FakeEndpoint() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, "");
        });
        server_.Post("/proxy/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            handle(req, res, "proxied ");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    std::atomic<int> fail_first{0};
    std::string finish_reason = "stop";
    std::mutex mu;
    json last_body;
    std::string last_auth;

private:
    void handle(const httplib::Request& req, httplib::Response& res, const std::string& tag) {
        {
            std::lock_guard lock(mu);
            last_body = json::parse(req.body);
            last_auth = req.get_header_value("Authorization");
        }
        if (fail_first.load() > 0) {
            --fail_first;
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        const auto& user = last_body["messages"][1]["content"];
        json out{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", tag + "echo " + user.get<std::string>()}}},
                                               {"finish_reason", finish_reason}}})}};
        res.set_content(out.dump(), "application/json");
    }

    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

CompletionRequest request() {
    CompletionRequest r;
    r.model_name = "gemma-2b";
    r.problem_id = "p";
    r.system = "sys";
    r.user = "solve";
    r.temperature = 0.8;
    r.max_tokens = 64;
    r.seed = 17;
    return r;
}

}  // namespace

TEST(ChatClient, RequestBodyCarriesSamplingFields) {
    const auto body = build_chat_request(request());
    EXPECT_EQ(body["model"], "gemma-2b");
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "solve");
    EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.8);
    EXPECT_EQ(body["max_tokens"], 64);
    EXPECT_EQ(body["seed"], 17);
    EXPECT_EQ(body["n"], 1);
}

TEST(ChatClient, ParsesContentAndTruncation) {
    EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":"hi"},"finish_reason":"stop"}]})").text, "hi");
    EXPECT_TRUE(parse_chat_response(R"({"choices":[{"message":{"content":"h"},"finish_reason":"length"}]})").truncated);
    EXPECT_THROW(parse_chat_response("not json"), BackendError);
    EXPECT_THROW(parse_chat_response(R"({"choices":[]})"), BackendError);
    EXPECT_THROW(parse_chat_response(R"({"choices":[{"message":{"content":null}}]})"), BackendError);
}

TEST(ChatClient, UrlPrefixIsKept) {
    ChatEndpointBackend b("http://host:8000/proxy/");
    EXPECT_EQ(b.origin(), "http://host:8000");
    EXPECT_EQ(b.request_path(), "/proxy/v1/chat/completions");
    EXPECT_THROW(ChatEndpointBackend("host:8000"), ConfigError);
}

TEST(ChatClient, RoundTripAgainstFakeServer) {
    FakeEndpoint server;
    ::setenv("TPT_TEST_KEY", "sekret", 1);
    EndpointOptions opts;
    opts.api_key_env = "TPT_TEST_KEY";
    ChatEndpointBackend backend(server.url(), opts);
    const auto c = backend.complete(request());
    EXPECT_EQ(c.text, "echo solve");
    EXPECT_FALSE(c.truncated);
    EXPECT_EQ(server.last_auth, "Bearer sekret");
    EXPECT_EQ(server.last_body["seed"], 17);

    ChatEndpointBackend proxied(server.url() + "/proxy", opts);
    EXPECT_EQ(proxied.complete(request()).text, "proxied echo solve");
    ::unsetenv("TPT_TEST_KEY");
}

TEST(ChatClient, NoKeyMeansNoAuthorizationHeader) {
    FakeEndpoint server;
    EndpointOptions opts;
    opts.api_key_env = "TPT_TEST_KEY_UNSET_FOR_SURE";
    ChatEndpointBackend backend(server.url(), opts);
    backend.complete(request());
    EXPECT_EQ(server.last_auth, "");
}

TEST(ChatClient, HttpErrorsAndTruncationSurface) {
    FakeEndpoint server;
    ChatEndpointBackend backend(server.url());
    server.fail_first = 1;
    EXPECT_THROW(backend.complete(request()), BackendError);
    server.finish_reason = "length";
    EXPECT_TRUE(backend.complete(request()).truncated);
}

TEST(ChatClient, SamplerRetriesTransientServerErrors) {
    FakeEndpoint server;
    server.fail_first = 2;
    ChatEndpointBackend backend(server.url());
    GenerationOptions opts;
    opts.max_in_flight = 1;
    opts.retry.max_attempts = 3;
    opts.retry.sleep = [](std::chrono::milliseconds) {};
    SamplingParams params;
    params.k = 1;
    const std::vector<ProblemSpec> ps{ProblemSpec{"p", "body", FinalAnswer{"1"}, Split::Train}};
    const auto result = sample_solutions(backend, ModelRef{"m", ModelKind::Endpoint, ModelFamily::Other, server.url()},
                                         ps, params, PromptTemplate::math(), opts);
    ASSERT_EQ(result.records.size(), 1u);
    EXPECT_TRUE(result.failures.empty());
}

TEST(ChatClient, UnreachableEndpointIsBackendError) {
    EndpointOptions opts;
    opts.connect_timeout_ms = 200;
    ChatEndpointBackend backend("http://127.0.0.1:1", opts);
    EXPECT_THROW(backend.complete(request()), BackendError);
}
