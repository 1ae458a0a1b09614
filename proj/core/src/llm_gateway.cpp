#include "apt/llm.hpp"

#include "apt/util.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <regex>

namespace apt {

using Json = nlohmann::json;

namespace {

constexpr std::string_view kJsonReminder = "Respond with valid JSON only, without any surrounding prose.";

std::string prompt_text(const ChatRequest& request) {
    std::string text = request.system;
    for (auto& m : request.messages) {
        text += "\n";
        text += m;
    }
    return text;
}

// Text between the first opening fence and its closing fence, if any.
std::string strip_fences(std::string_view text) {
    auto open = text.find("```");
    if (open == std::string_view::npos) return std::string(text);
    auto body = text.find('\n', open);
    if (body == std::string_view::npos) return std::string(text);
    auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) return std::string(text.substr(body + 1));
    return std::string(text.substr(body + 1, close - body - 1));
}

std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            stack.push_back(c == '{' ? '}' : ']');
        } else if (c == '}' || c == ']') {
            if (stack.empty() || stack.back() != c) return std::nullopt;
            stack.pop_back();
            if (stack.empty()) return i;
        }
    }
    return std::nullopt;
}

std::string substitute_vars(std::string text, const std::string& prompt) {
    std::map<std::string, std::string> vars;
    static const std::regex line_re(R"(^([A-Za-z_][A-Za-z0-9_]*):[ \t]*(.*)$)");
    for (auto& line : split_lines(prompt)) {
        std::smatch m;
        if (std::regex_match(line, m, line_re) && !vars.count(m[1])) vars[m[1]] = m[2];
    }
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{", pos);
        if (open == std::string::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string::npos) break;
        auto key = text.substr(open + 2, close - open - 2);
        out += text.substr(pos, open - pos);
        auto it = vars.find(key);
        out += it == vars.end() ? text.substr(open, close + 2 - open) : it->second;
        pos = close + 2;
    }
    out += text.substr(pos);
    return out;
}

}  // namespace

std::string request_hash(const ChatRequest& request) {
    Json key = {{"system", request.system}, {"messages", request.messages}};
    return sha256_hex(key.dump()).substr(0, 16);
}

Json extract_json(std::string_view text) {
    auto body = strip_fences(text);
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{' && body[i] != '[') continue;
        auto end = balanced_end(body, i);
        if (!end) continue;
        try {
            return Json::parse(body.substr(i, *end - i + 1));
        } catch (const Json::exception&) {
            continue;
        }
    }
    throw MalformedOutput("no JSON value in model output");
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

ProviderReply HttpProvider::send(const ChatRequest& request) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url_re)) {
        throw ProviderError("malformed endpoint url: " + config_.endpoint);
    }
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw ProviderError("environment variable " + config_.api_key_env + " is not set");

    Json messages = Json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        messages.push_back({{"role", i % 2 == 0 ? "user" : "assistant"}, {"content", request.messages[i]}});
    }
    Json body = {{"model", config_.model},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_output_tokens}};

    httplib::Client client(m[1].str());
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    client.set_write_timeout(config_.timeout_seconds);
    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    std::string path = m[2].matched ? m[2].str() : "/";

    spdlog::debug("POST {}{} model={}", m[1].str(), path, config_.model);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransientProviderError("transport error: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
        throw TransientProviderError("provider returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) throw ProviderError("provider returned HTTP " + std::to_string(res->status));

    try {
        auto reply_json = Json::parse(res->body);
        ProviderReply reply;
        reply.text = reply_json.at("choices").at(0).at("message").at("content").get<std::string>();
        if (auto u = reply_json.find("usage"); u != reply_json.end() && u->is_object()) {
            reply.usage.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
            reply.usage.completion_tokens = u->value("completion_tokens", std::size_t{0});
        }
        return reply;
    } catch (const Json::exception&) {
        throw TransientProviderError("unexpected response body from provider");
    }
}

ScriptedProvider::ScriptedProvider(Json script) {
    if (!script.is_object()) throw SchemaError("script must be a JSON object");
    if (auto d = script.find("default"); d != script.end() && !d->is_null()) default_ = d->get<std::string>();
    for (auto& r : script.value("rules", Json::array())) {
        Rule rule;
        rule.hash = r.value("hash", "");
        if (auto c = r.find("contains"); c != r.end()) {
            if (c->is_string()) rule.contains.push_back(c->get<std::string>());
            else rule.contains = c->get<std::vector<std::string>>();
        }
        if (rule.hash.empty() && rule.contains.empty()) throw SchemaError("script rule needs `hash` or `contains`");
        if (auto resp = r.find("response"); resp != r.end()) rule.responses.push_back(*resp);
        for (auto& resp : r.value("responses", Json::array())) rule.responses.push_back(resp);
        if (rule.responses.empty()) throw SchemaError("script rule without responses");
        rules_.push_back(std::move(rule));
    }
}

ScriptedProvider ScriptedProvider::from_file(const std::filesystem::path& path) {
    try {
        return ScriptedProvider(Json::parse(read_file(path)));
    } catch (const Json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

ProviderReply ScriptedProvider::send(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    ++calls_;
    auto prompt = prompt_text(request);
    auto hash = request_hash(request);
    const Json* response = nullptr;
    Json fallback;
    for (auto& rule : rules_) {
        bool hit = !rule.hash.empty() ? rule.hash == hash
                                      : std::all_of(rule.contains.begin(), rule.contains.end(), [&](const std::string& s) {
                                            return prompt.find(s) != std::string::npos;
                                        });
        if (!hit) continue;
        response = &rule.responses[std::min(rule.cursor, rule.responses.size() - 1)];
        ++rule.cursor;
        break;
    }
    if (!response) {
        if (!default_) throw ProviderError("scripted provider has no response for request " + hash);
        fallback = *default_;
        response = &fallback;
    }
    if (response->is_object()) {
        auto kind = response->value("error", "transient");
        if (kind == "transient") throw TransientProviderError("scripted transient failure");
        throw ProviderError("scripted failure: " + kind);
    }
    ProviderReply reply;
    reply.text = substitute_vars(response->get<std::string>(), prompt);
    return reply;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(std::unique_ptr<Provider> provider, GatewayConfig config, const Tokenizer& tokenizer)
    : provider_(std::move(provider)),
      config_(std::move(config)),
      tokenizer_(&tokenizer),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_concurrent_requests, 1, 1024))) {
    if (config_.retries < 0) throw ConfigError("retries must be non-negative");
}

std::size_t LlmGateway::estimate_tokens(const ChatRequest& request) const {
    std::size_t total = tokenizer_->count(request.system);
    for (auto& m : request.messages) total += tokenizer_->count(m);
    return total;
}

GatewayMetrics LlmGateway::metrics() const {
    std::lock_guard lock(metrics_mutex_);
    return metrics_;
}

ChatResponse LlmGateway::complete(ChatRequest request) {
    auto estimate = estimate_tokens(request);
    if (estimate > config_.context_budget) {
        throw BudgetExceeded("prompt needs about " + std::to_string(estimate) + " tokens, budget is " +
                             std::to_string(config_.context_budget));
    }
    {
        std::lock_guard lock(metrics_mutex_);
        ++metrics_.requests;
    }

    Json attempts = Json::array();
    ChatResponse response;
    ProviderReply reply;
    std::string last_error;
    bool malformed = false;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            response.retry_count = attempt;
            std::lock_guard lock(metrics_mutex_);
            ++metrics_.retries;
        }
        auto start = std::chrono::steady_clock::now();
        try {
            slots_.acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{slots_};
            reply = provider_->send(request);
        } catch (const TransientProviderError& e) {
            last_error = e.what();
            malformed = false;
            attempts.push_back({{"error", last_error}});
            spdlog::warn("provider attempt {} failed: {}", attempt + 1, last_error);
            continue;
        } catch (const ProviderError& e) {
            attempts.push_back({{"error", std::string(e.what())}});
            write_transcript(request, attempts, nullptr);
            std::lock_guard lock(metrics_mutex_);
            ++metrics_.failures;
            throw;
        }
        if (provider_->measures_time()) {
            response.latency =
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        }
        response.usage = reply.usage;
        if (response.usage.prompt_tokens == 0) response.usage.prompt_tokens = estimate;
        if (response.usage.completion_tokens == 0) response.usage.completion_tokens = tokenizer_->count(reply.text);
        attempts.push_back({{"text", reply.text}});

        if (request.expected_format == ExpectedFormat::json) {
            try {
                response.json = extract_json(reply.text);
                response.text = response.json->dump();
            } catch (const MalformedOutput& e) {
                last_error = e.what();
                malformed = true;
                request.messages.push_back(reply.text);
                request.messages.emplace_back(kJsonReminder);
                continue;
            }
        } else {
            response.text = reply.text;
        }
        {
            std::lock_guard lock(metrics_mutex_);
            metrics_.prompt_tokens += response.usage.prompt_tokens;
            metrics_.completion_tokens += response.usage.completion_tokens;
        }
        write_transcript(request, attempts, &response);
        return response;
    }
    write_transcript(request, attempts, nullptr);
    {
        std::lock_guard lock(metrics_mutex_);
        ++metrics_.failures;
    }
    auto msg = "gave up after " + std::to_string(config_.retries) + " retries: " + last_error;
    if (malformed) throw MalformedOutput(msg);
    throw ProviderError(msg);
}

void LlmGateway::write_transcript(const ChatRequest& request, const Json& attempts, const ChatResponse* response) {
    if (!config_.transcript_dir) return;
    auto seq = ++seq_;
    Json t = {{"seq", seq},
              {"provider", provider_->name()},
              {"template_id", request.template_id},
              {"template_hash", request.template_hash},
              {"request_hash", request_hash(request)},
              {"system", request.system},
              {"messages", request.messages},
              {"temperature", request.temperature},
              {"max_output_tokens", request.max_output_tokens},
              {"expected_format", request.expected_format == ExpectedFormat::json ? "json" : "free_text"},
              {"attempts", attempts}};
    if (response) {
        t["response"] = response->text;
        t["retry_count"] = response->retry_count;
        if (provider_->measures_time()) t["latency_ms"] = response->latency.count();
    } else {
        t["response"] = nullptr;
    }
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.json", seq);
    write_file_atomic(*config_.transcript_dir / config_.run_id / name, t.dump(2) + "\n");
}

}  // namespace apt
