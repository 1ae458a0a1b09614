#pragma once

#include "apt/compression.hpp"
#include "apt/error.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace apt {

enum class ExpectedFormat { free_text, json };

struct ChatRequest {
    std::string system;
    std::vector<std::string> messages;  // alternating user/assistant turns, user first
    double temperature = 0.0;
    int max_output_tokens = 4096;
    ExpectedFormat expected_format = ExpectedFormat::free_text;
    std::string template_id;    // prompt file the request was rendered from
    std::string template_hash;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct ChatResponse {
    std::string text;                    // for json requests: the extracted payload
    std::optional<nlohmann::json> json;  // set when expected_format == json
    Usage usage;
    std::chrono::milliseconds latency{0};
    int retry_count = 0;
};

/// Transport failure, HTTP 429 or 5xx. The gateway retries these; any other
/// ProviderError is final.
class TransientProviderError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

struct ProviderReply {
    std::string text;
    Usage usage;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    /// False for providers whose latency is not meaningful (scripted).
    virtual bool measures_time() const { return true; }
    virtual ProviderReply send(const ChatRequest& request) = 0;
};

struct HttpProviderConfig {
    std::string endpoint = "https://api.deepseek.com/v1/chat/completions";
    std::string model = "deepseek-chat";
    std::string api_key_env = "APT_API_KEY";
    int timeout_seconds = 120;
};

/// OpenAI-compatible chat completions. The key is read from the environment
/// on each call and never stored, logged or echoed in errors.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);
    std::string name() const override { return "http"; }
    ProviderReply send(const ChatRequest& request) override;

private:
    HttpProviderConfig config_;
};

/// Deterministic provider driven by a JSON script:
///
///   {"default": "...",
///    "rules": [{"hash": "<request hash>" | "contains": ["a", "b"],
///               "responses": ["text", {"error": "transient"}, ...]}]}
///
/// The first rule whose hash equals the request hash, or whose `contains`
/// strings all occur in the prompt, answers. Each rule walks its responses in
/// order and then repeats the last one. `{{KEY}}` in a response is replaced by
/// the value of a `KEY: value` line of the prompt.
class ScriptedProvider final : public Provider {
public:
    explicit ScriptedProvider(nlohmann::json script);
    static ScriptedProvider from_file(const std::filesystem::path& path);

    std::string name() const override { return "mock"; }
    bool measures_time() const override { return false; }
    ProviderReply send(const ChatRequest& request) override;

    std::size_t calls() const { return calls_; }

private:
    struct Rule {
        std::string hash;
        std::vector<std::string> contains;
        std::vector<nlohmann::json> responses;
        std::size_t cursor = 0;
    };
    std::vector<Rule> rules_;
    std::optional<std::string> default_;
    std::mutex mutex_;
    std::size_t calls_ = 0;
};

/// Stable hash of the system prompt and messages.
std::string request_hash(const ChatRequest& request);

/// Strips markdown fences, then returns the first balanced top-level JSON
/// object or array. Throws MalformedOutput.
nlohmann::json extract_json(std::string_view text);

struct GatewayConfig {
    int retries = 3;
    std::size_t max_concurrent_requests = 4;
    std::size_t context_budget = 60000;  // prompt tokens
    std::optional<std::filesystem::path> transcript_dir;
    std::string run_id = "run";
};

struct GatewayMetrics {
    std::size_t requests = 0;
    std::size_t retries = 0;
    std::size_t failures = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

class LlmGateway {
public:
    LlmGateway(std::unique_ptr<Provider> provider, GatewayConfig config,
               const Tokenizer& tokenizer = default_tokenizer());

    /// Throws BudgetExceeded, ProviderError or MalformedOutput.
    ChatResponse complete(ChatRequest request);

    std::size_t estimate_tokens(const ChatRequest& request) const;
    GatewayMetrics metrics() const;
    Provider& provider() { return *provider_; }
    const GatewayConfig& config() const { return config_; }

private:
    void write_transcript(const ChatRequest& request, const nlohmann::json& attempts, const ChatResponse* response);

    std::unique_ptr<Provider> provider_;
    GatewayConfig config_;
    const Tokenizer* tokenizer_;
    std::counting_semaphore<1024> slots_;
    std::atomic<std::size_t> seq_{0};
    mutable std::mutex metrics_mutex_;
    GatewayMetrics metrics_;
};

}  // namespace apt
