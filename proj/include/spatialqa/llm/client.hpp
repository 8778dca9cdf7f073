#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace spatialqa::llm {

enum class Role { System, User, Assistant };
std::string_view to_string(Role r);

struct ChatTurn {
    Role role = Role::User;
    std::string text;
    /// Image or frame paths; how they travel depends on ChatConfig::media_mode.
    std::vector<std::string> media;
};

/// Output-length tiers: plain answers, reasoning cores, agent runs.
enum class TokenTier { Standard, Reasoning, Agent };
int max_tokens_for(TokenTier tier);  // 512 / 2048 / 4096

enum class MediaMode { DataUri, FileRef };

struct ChatConfig {
    std::string endpoint;  // base URL, e.g. http://127.0.0.1:8000/v1
    std::string model;
    double temperature = 0.0;
    int max_tokens = 512;
    std::uint64_t seed = 0;
    bool send_seed = true;
    double timeout_seconds = 120.0;
    int retry_budget = 3;  // total attempts
    double retry_backoff_seconds = 0.5;
    std::string api_key_env = "SPATIALQA_API_KEY";
    MediaMode media_mode = MediaMode::DataUri;
    /// Media items attached per request; 0 means no cap. Extra items are
    /// subsampled evenly.
    int max_media = 0;
    /// Requests per second for the client-wide token bucket; 0 disables.
    double rate_limit = 0.0;

    /// Throws ConfigError on negative temperature or non-positive limits.
    void validate() const;
};

struct ChatReply {
    std::string text;
    int retries = 0;
};

/// A chat-completion backend. Implementations must accept concurrent calls.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatReply complete(const std::vector<ChatTurn>& turns, const ChatConfig& cfg) = 0;
    std::string chat(const std::vector<ChatTurn>& turns, const ChatConfig& cfg) {
        return complete(turns, cfg).text;
    }
    /// Convenience for single user prompts.
    std::string ask(const std::string& prompt, const ChatConfig& cfg,
                    const std::vector<std::string>& media = {});
};

/// Plays back fixed responses in order and records every prompt it receives.
class ScriptedClient : public ChatClient {
public:
    explicit ScriptedClient(std::vector<std::string> responses);

    ChatReply complete(const std::vector<ChatTurn>& turns, const ChatConfig& cfg) override;

    /// Every received conversation, in call order.
    std::vector<std::vector<ChatTurn>> received() const;
    /// Text of the last user turn of each call.
    std::vector<std::string> prompts() const;
    std::size_t calls() const;
    std::size_t remaining() const;

private:
    mutable std::mutex mu_;
    std::vector<std::string> responses_;
    std::size_t next_ = 0;
    std::vector<std::vector<ChatTurn>> received_;
};

/// Responses computed by a callback; handy for echo or fault-injection clients.
class CallbackClient : public ChatClient {
public:
    using Fn = std::function<std::string(const std::vector<ChatTurn>&)>;
    explicit CallbackClient(Fn fn) : fn_(std::move(fn)) {}
    ChatReply complete(const std::vector<ChatTurn>& turns, const ChatConfig&) override {
        return {fn_(turns), 0};
    }

private:
    Fn fn_;
};

/// OpenAI-compatible POST {endpoint}/chat/completions.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient() = default;
    ChatReply complete(const std::vector<ChatTurn>& turns, const ChatConfig& cfg) override;

    /// Request body as sent on the wire (exposed for tests).
    static std::string build_request_body(const std::vector<ChatTurn>& turns, const ChatConfig& cfg);
    /// Extracts choices[0].message.content; throws ProtocolError otherwise.
    static std::string parse_response_body(const std::string& body);
    /// GET {endpoint}/models; any HTTP answer counts as reachable. Throws
    /// TransportError when nothing answers, ConfigError on a malformed endpoint.
    static void probe(const ChatConfig& cfg);

private:
    void throttle(double rate);

    std::mutex bucket_mu_;
    double tokens_ = 1.0;
    std::chrono::steady_clock::time_point last_refill_{};
};

}  // namespace spatialqa::llm
