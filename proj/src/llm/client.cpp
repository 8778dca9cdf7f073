#include "spatialqa/llm/client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"

namespace spatialqa::llm {

using nlohmann::json;

std::string_view to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

int max_tokens_for(TokenTier tier) {
    switch (tier) {
        case TokenTier::Standard: return 512;
        case TokenTier::Reasoning: return 2048;
        case TokenTier::Agent: return 4096;
    }
    return 512;
}

void ChatConfig::validate() const {
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be > 0");
    if (retry_budget < 1) throw ConfigError("retry_budget must be >= 1");
    if (timeout_seconds <= 0.0) throw ConfigError("timeout must be > 0");
}

std::string ChatClient::ask(const std::string& prompt, const ChatConfig& cfg,
                            const std::vector<std::string>& media) {
    return chat({ChatTurn{Role::User, prompt, media}}, cfg);
}

ScriptedClient::ScriptedClient(std::vector<std::string> responses) : responses_(std::move(responses)) {}

ChatReply ScriptedClient::complete(const std::vector<ChatTurn>& turns, const ChatConfig&) {
    std::lock_guard lock(mu_);
    received_.push_back(turns);
    if (next_ >= responses_.size()) {
        throw ScriptExhausted("scripted client has no response left (call " +
                              std::to_string(next_ + 1) + ")");
    }
    return {responses_[next_++], 0};
}

std::vector<std::vector<ChatTurn>> ScriptedClient::received() const {
    std::lock_guard lock(mu_);
    return received_;
}

std::vector<std::string> ScriptedClient::prompts() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& conv : received_) {
        std::string last;
        for (const auto& t : conv) {
            if (t.role == Role::User) last = t.text;
        }
        out.push_back(last);
    }
    return out;
}

std::size_t ScriptedClient::calls() const {
    std::lock_guard lock(mu_);
    return received_.size();
}

std::size_t ScriptedClient::remaining() const {
    std::lock_guard lock(mu_);
    return responses_.size() - std::min(next_, responses_.size());
}

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // no trailing slash
};

Url split_url(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme: " + endpoint);
    const auto slash = endpoint.find('/', scheme + 3);
    Url u;
    u.origin = endpoint.substr(0, slash);
    u.path = slash == std::string::npos ? "" : endpoint.substr(slash);
    while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();
    return u;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TransportError("cannot read media file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string mime_for(const std::string& path) {
    const std::string p = to_lower(path);
    if (p.ends_with(".jpg") || p.ends_with(".jpeg")) return "image/jpeg";
    if (p.ends_with(".mp4")) return "video/mp4";
    return "image/png";
}

std::vector<std::string> cap_media(const std::vector<std::string>& media, int cap) {
    if (cap <= 0 || static_cast<int>(media.size()) <= cap) return media;
    std::vector<std::string> out;
    const double step = static_cast<double>(media.size() - 1) / (cap > 1 ? cap - 1 : 1);
    for (int i = 0; i < cap; ++i) {
        out.push_back(media[static_cast<std::size_t>(std::lround(i * step))]);
    }
    return out;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string HttpChatClient::build_request_body(const std::vector<ChatTurn>& turns, const ChatConfig& cfg) {
    json messages = json::array();
    for (const auto& t : turns) {
        json msg;
        msg["role"] = std::string(to_string(t.role));
        const auto media = cap_media(t.media, cfg.max_media);
        if (media.empty()) {
            msg["content"] = t.text;
        } else {
            json parts = json::array();
            for (const auto& m : media) {
                std::string url;
                if (cfg.media_mode == MediaMode::DataUri) {
                    url = "data:" + mime_for(m) + ";base64," + base64_encode(read_file(m));
                } else {
                    url = "file://" + m;
                }
                parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
            }
            parts.push_back({{"type", "text"}, {"text", t.text}});
            msg["content"] = parts;
        }
        messages.push_back(msg);
    }
    json body = {{"model", cfg.model},
                 {"messages", messages},
                 {"temperature", cfg.temperature},
                 {"max_tokens", cfg.max_tokens},
                 {"stream", false}};
    if (cfg.temperature == 0.0) body["top_p"] = 1.0;
    if (cfg.send_seed) body["seed"] = cfg.seed;
    return body.dump();
}

std::string HttpChatClient::parse_response_body(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("chat response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw ProtocolError("chat response has no choices");
    }
    const auto& msg = j["choices"][0].value("message", json::object());
    if (!msg.contains("content")) throw ProtocolError("chat response has no message content");
    const auto& content = msg["content"];
    if (content.is_string()) return content.get<std::string>();
    if (content.is_null()) return {};
    if (content.is_array()) {
        std::string out;
        for (const auto& p : content) {
            if (p.is_object() && p.value("type", "") == "text") out += p.value("text", "");
        }
        return out;
    }
    throw ProtocolError("chat response content has unexpected type");
}

void HttpChatClient::throttle(double rate) {
    if (rate <= 0.0) return;
    std::unique_lock lock(bucket_mu_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        if (last_refill_ == std::chrono::steady_clock::time_point{}) last_refill_ = now;
        const double dt = std::chrono::duration<double>(now - last_refill_).count();
        tokens_ = std::min(1.0, tokens_ + dt * rate);
        last_refill_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rate;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

ChatReply HttpChatClient::complete(const std::vector<ChatTurn>& turns, const ChatConfig& cfg) {
    cfg.validate();
    const Url url = split_url(cfg.endpoint);
    const std::string body = build_request_body(turns, cfg);

    httplib::Client cli(url.origin);
    const auto secs = static_cast<time_t>(cfg.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg.timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt < cfg.retry_budget; ++attempt) {
        if (attempt > 0 && cfg.retry_backoff_seconds > 0) {
            std::this_thread::sleep_for(
                std::chrono::duration<double>(cfg.retry_backoff_seconds * attempt));
        }
        throttle(cfg.rate_limit);
        auto res = cli.Post(url.path + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                                res->body.substr(0, 200));
        }
        return {parse_response_body(res->body), attempt};
    }
    throw TransportError("chat request failed after " + std::to_string(cfg.retry_budget) +
                         " attempts: " + last_error);
}

void HttpChatClient::probe(const ChatConfig& cfg) {
    const Url url = split_url(cfg.endpoint);
    httplib::Client cli(url.origin);
    const auto secs = static_cast<time_t>(std::min(cfg.timeout_seconds, 10.0));
    cli.set_connection_timeout(std::max<time_t>(secs, 1), 0);
    cli.set_read_timeout(std::max<time_t>(secs, 1), 0);
    auto res = cli.Get(url.path + "/models");
    if (!res) throw TransportError("chat endpoint unreachable: " + cfg.endpoint + " (" + httplib::to_string(res.error()) + ")");
}

}  // namespace spatialqa::llm
