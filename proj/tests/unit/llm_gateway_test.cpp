#include "apt/error.hpp"
#include "apt/llm.hpp"
#include "apt/util.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <random>
#include <sstream>
#include <thread>

namespace apt {
namespace {

using Json = nlohmann::json;
using testing::TempDir;

ChatRequest ask(std::string text, ExpectedFormat format = ExpectedFormat::free_text) {
    ChatRequest r;
    r.system = "sys";
    r.messages = {std::move(text)};
    r.expected_format = format;
    return r;
}

LlmGateway scripted(Json script, GatewayConfig config = {}) {
    return LlmGateway(std::make_unique<ScriptedProvider>(std::move(script)), std::move(config));
}

TEST(ScriptedProvider, HashRuleReturnsCannedText) {
    auto req = ask("hello");
    auto gw = scripted({{"rules", {{{"hash", request_hash(req)}, {"responses", {"canned"}}}}}});
    auto res = gw.complete(req);
    EXPECT_EQ(res.text, "canned");
    EXPECT_EQ(res.retry_count, 0);
    EXPECT_EQ(res.latency.count(), 0);
}

TEST(ScriptedProvider, ContainsRulesWalkTheirSequence) {
    auto gw = scripted({{"rules", {{{"contains", {"alpha", "beta"}}, {"responses", {"one", "two"}}},
                                   {{"contains", "alpha"}, {"response", "only alpha"}}}},
                        {"default", "fallback"}});
    EXPECT_EQ(gw.complete(ask("alpha")).text, "only alpha");
    EXPECT_EQ(gw.complete(ask("alpha beta")).text, "one");
    EXPECT_EQ(gw.complete(ask("beta alpha")).text, "two");
    EXPECT_EQ(gw.complete(ask("alpha beta")).text, "two");
    EXPECT_EQ(gw.complete(ask("gamma")).text, "fallback");
}

TEST(ScriptedProvider, SubstitutesPromptVariables) {
    auto gw = scripted({{"default", "class {{CLASS}}Test { {{MISSING}} }"}});
    EXPECT_EQ(gw.complete(ask("intro\nCLASS: RedissonQueue\nrest")).text, "class RedissonQueueTest { {{MISSING}} }");
}

TEST(ScriptedProvider, UnmatchedWithoutDefaultIsAnError) {
    auto gw = scripted(Json::object());
    EXPECT_THROW(gw.complete(ask("x")), ProviderError);
}

TEST(ScriptedProvider, RejectsMalformedScripts) {
    EXPECT_THROW(ScriptedProvider(Json::array()), SchemaError);
    EXPECT_THROW(ScriptedProvider(Json{{"rules", {{{"responses", {"x"}}}}}}), SchemaError);
    EXPECT_THROW(ScriptedProvider(Json{{"rules", {{{"contains", "x"}}}}}), SchemaError);
}

TEST(ExtractJson, StripsFences) {
    auto v = extract_json("Here you go:\n```json\n{\"a\": [1, 2]}\n```\nthanks");
    EXPECT_EQ(v, (Json{{"a", {1, 2}}}));
}

TEST(ExtractJson, FirstBalancedValue) {
    EXPECT_EQ(extract_json("prose {\"k\": \"}{\"} more {\"x\":1}"), (Json{{"k", "}{"}}));
    EXPECT_EQ(extract_json("[1, {\"b\": []}] trailing"), Json::parse("[1, {\"b\": []}]"));
    EXPECT_EQ(extract_json("{broken {\"ok\": true}"), (Json{{"ok", true}}));
    EXPECT_THROW(extract_json("no json here"), MalformedOutput);
    EXPECT_THROW(extract_json("{\"unterminated\": "), MalformedOutput);
}

// Random JSON documents wrapped in prose and optional fences come back intact.
TEST(ExtractJson, RandomDocumentsRoundTrip) {
    std::mt19937 rng(3);
    std::function<Json(int)> gen = [&](int depth) -> Json {
        switch (depth > 2 ? rng() % 3 : rng() % 5) {
            case 0: return static_cast<int>(rng() % 1000);
            case 1: return std::string("s{") + std::to_string(rng() % 10) + "]\"";
            case 2: return rng() % 2 == 0;
            case 3: {
                Json a = Json::array();
                for (unsigned i = 0; i < rng() % 4; ++i) a.push_back(gen(depth + 1));
                return a;
            }
            default: {
                Json o = Json::object();
                for (unsigned i = 0; i < rng() % 4; ++i) o["k" + std::to_string(i)] = gen(depth + 1);
                return o;
            }
        }
    };
    for (int i = 0; i < 200; ++i) {
        Json doc = rng() % 2 ? Json{{"root", gen(0)}} : Json::array({gen(0)});
        std::string text = doc.dump(rng() % 2 ? 2 : -1);
        if (rng() % 2) text = "```json\n" + text + "\n```";
        text = "Sure. Reasoning first (no braces).\n" + text + "\nDone.";
        EXPECT_EQ(extract_json(text), doc) << text;
    }
}

TEST(LlmGateway, RetriesTransientFailures) {
    auto gw = scripted({{"rules", {{{"contains", "go"},
                                     {"responses", {{{"error", "transient"}}, {{"error", "transient"}}, "{\"ok\":1}"}}}}}});
    auto res = gw.complete(ask("go", ExpectedFormat::json));
    EXPECT_EQ(res.retry_count, 2);
    ASSERT_TRUE(res.json);
    EXPECT_EQ(*res.json, (Json{{"ok", 1}}));
    EXPECT_EQ(gw.metrics().retries, 2u);
}

TEST(LlmGateway, GivesUpAfterConfiguredRetries) {
    GatewayConfig config;
    config.retries = 3;
    auto provider = std::make_unique<ScriptedProvider>(Json{{"default", nullptr},
                                                            {"rules", {{{"contains", "go"}, {"responses", {{{"error", "transient"}}}}}}}});
    auto* raw = provider.get();
    LlmGateway gw(std::move(provider), config);
    EXPECT_THROW(gw.complete(ask("go")), ProviderError);
    EXPECT_EQ(raw->calls(), 4u);
    EXPECT_EQ(gw.metrics().failures, 1u);
}

TEST(LlmGateway, NonTransientErrorsAreNotRetried) {
    auto provider = std::make_unique<ScriptedProvider>(
        Json{{"rules", {{{"contains", "go"}, {"responses", {{{"error", "unauthorized"}}, "late"}}}}}});
    auto* raw = provider.get();
    LlmGateway gw(std::move(provider), {});
    EXPECT_THROW(gw.complete(ask("go")), ProviderError);
    EXPECT_EQ(raw->calls(), 1u);
}

TEST(LlmGateway, MalformedJsonIsRetriedWithReminder) {
    TempDir dir;
    GatewayConfig config;
    config.transcript_dir = dir.path();
    config.run_id = "r1";
    auto gw = scripted({{"rules", {{{"contains", "valid JSON only"}, {"response", "[1]"}},
                                   {{"contains", "go"}, {"response", "not json"}}}}},
                       config);
    auto res = gw.complete(ask("go", ExpectedFormat::json));
    EXPECT_EQ(res.retry_count, 1);
    EXPECT_EQ(res.text, "[1]");

    auto t = Json::parse(read_file(dir.path() / "r1" / "000001.json"));
    EXPECT_EQ(t["attempts"].size(), 2u);
    ASSERT_EQ(t["messages"].size(), 3u);
    EXPECT_EQ(t["messages"][1], "not json");
    EXPECT_FALSE(t.contains("latency_ms"));

    auto always_bad = scripted({{"default", "still prose"}});
    EXPECT_THROW(always_bad.complete(ask("go", ExpectedFormat::json)), MalformedOutput);
}

TEST(LlmGateway, BudgetCheckedBeforeDispatch) {
    GatewayConfig config;
    config.context_budget = 5;
    auto provider = std::make_unique<ScriptedProvider>(Json{{"default", "x"}});
    auto* raw = provider.get();
    LlmGateway gw(std::move(provider), config);
    EXPECT_NO_THROW(gw.complete(ask("a b c")));  // sys + 3 words
    EXPECT_THROW(gw.complete(ask("a b c d e f")), BudgetExceeded);
    EXPECT_EQ(raw->calls(), 1u);
}

TEST(LlmGateway, TranscriptsCarryTemplateHash) {
    TempDir dir;
    GatewayConfig config;
    config.transcript_dir = dir.path();
    config.run_id = "run-7";
    auto gw = scripted({{"default", "ok"}}, config);
    auto req = ask("q");
    req.template_id = "generate";
    req.template_hash = "abc123";
    gw.complete(req);
    gw.complete(req);
    auto t = Json::parse(read_file(dir.path() / "run-7" / "000002.json"));
    EXPECT_EQ(t["template_hash"], "abc123");
    EXPECT_EQ(t["template_id"], "generate");
    EXPECT_EQ(t["response"], "ok");
    EXPECT_EQ(t["provider"], "mock");
}

class SlowProvider final : public Provider {
public:
    std::string name() const override { return "slow"; }
    ProviderReply send(const ChatRequest&) override {
        int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        return {"done", {}};
    }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
};

TEST(LlmGateway, SemaphoreCapsInFlightRequests) {
    auto provider = std::make_unique<SlowProvider>();
    auto* raw = provider.get();
    GatewayConfig config;
    config.max_concurrent_requests = 2;
    LlmGateway gw(std::move(provider), config);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { gw.complete(ask("x")); });
    for (auto& t : threads) t.join();
    EXPECT_LE(raw->peak.load(), 2);
    EXPECT_EQ(gw.metrics().requests, 8u);
}

// A local OpenAI-shaped server. Fails the first `failures` calls with 503.
class FakeServer {
public:
    explicit FakeServer(int failures) : failures_(failures) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (calls_++ < failures_) {
                res.status = 503;
                return;
            }
            if (last_auth != "Bearer sk-test-secret-9876") {
                res.status = 401;
                res.set_content("{\"error\":\"bad key " + last_auth + "\"}", "application/json");
                return;
            }
            Json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "```json\n{\"v\": 2}\n```"}}}}}},
                         {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}};
            res.set_content(body.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int failures_;
    int calls_ = 0;
    int port_ = 0;
    std::thread thread_;
};

TEST(HttpProvider, SpeaksChatCompletionsAndRetries5xx) {
    FakeServer server(1);
    ::setenv("APT_TEST_KEY", "sk-test-secret-9876", 1);
    HttpProviderConfig pc;
    pc.endpoint = server.endpoint();
    pc.model = "deepseek-chat";
    pc.api_key_env = "APT_TEST_KEY";
    pc.timeout_seconds = 5;
    LlmGateway gw(std::make_unique<HttpProvider>(pc), {});
    auto res = gw.complete(ask("q", ExpectedFormat::json));
    EXPECT_EQ(res.retry_count, 1);
    EXPECT_EQ(*res.json, (Json{{"v", 2}}));
    EXPECT_EQ(res.usage.prompt_tokens, 11u);
    auto body = Json::parse(server.last_body);
    EXPECT_EQ(body["model"], "deepseek-chat");
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "q");
    EXPECT_EQ(body["temperature"], 0.0);
}

// The credential must not leak into logs, transcripts or error messages,
// even when the server echoes it back.
TEST(HttpProvider, CredentialNeverLeaks) {
    const std::string secret = "sk-test-secret-9876";
    std::ostringstream log;
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(log);
    auto logger = std::make_shared<spdlog::logger>("capture", sink);
    logger->set_level(spdlog::level::trace);
    auto previous = spdlog::default_logger();
    spdlog::set_default_logger(logger);

    TempDir dir;
    GatewayConfig config;
    config.transcript_dir = dir.path();
    config.retries = 1;
    std::string errors;
    {
        FakeServer ok(1);
        ::setenv("APT_TEST_KEY", secret.c_str(), 1);
        HttpProviderConfig pc;
        pc.endpoint = ok.endpoint();
        pc.api_key_env = "APT_TEST_KEY";
        LlmGateway gw(std::make_unique<HttpProvider>(pc), config);
        gw.complete(ask("q"));

        ::setenv("APT_TEST_KEY", "sk-wrong-key-1234", 1);
        try {
            gw.complete(ask("q"));
        } catch (const Error& e) {
            errors += e.what();
        }
    }
    ::setenv("APT_TEST_KEY", secret.c_str(), 1);
    HttpProviderConfig dead;
    dead.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    dead.api_key_env = "APT_TEST_KEY";
    dead.timeout_seconds = 1;
    LlmGateway gw(std::make_unique<HttpProvider>(dead), config);
    try {
        gw.complete(ask("q"));
    } catch (const Error& e) {
        errors += e.what();
    }
    spdlog::set_default_logger(previous);

    std::string persisted;
    for (auto& f : std::filesystem::recursive_directory_iterator(dir.path())) {
        if (f.is_regular_file()) persisted += read_file(f.path());
    }
    EXPECT_FALSE(persisted.empty());
    EXPECT_FALSE(errors.empty());
    for (const std::string& key : {secret, std::string("sk-wrong-key-1234")}) {
        EXPECT_EQ(log.str().find(key), std::string::npos);
        EXPECT_EQ(persisted.find(key), std::string::npos);
        EXPECT_EQ(errors.find(key), std::string::npos);
    }
}

TEST(HttpProvider, MissingKeyIsReported) {
    ::unsetenv("APT_NO_SUCH_KEY");
    HttpProviderConfig pc;
    pc.api_key_env = "APT_NO_SUCH_KEY";
    HttpProvider p(pc);
    EXPECT_THROW(p.send(ask("q")), ProviderError);
}

}  // namespace
}  // namespace apt
