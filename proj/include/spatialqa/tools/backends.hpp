#pragma once

#include "spatialqa/geometry/homography.hpp"
#include "spatialqa/llm/client.hpp"
#include "spatialqa/tools/catalog.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace spatialqa::tools {

/// A media reference as written by the agent ("image-0" or a path) and the
/// file it resolves to.
struct MediaRef {
    std::string ref;
    std::string path;
};

struct ToolCall {
    std::string name;
    json arguments = json::object();
    std::vector<MediaRef> media;  // resolved before dispatch
};

struct ToolResult {
    bool ok = false;
    json payload;       // set when ok
    std::string error;  // set when !ok
    double latency_ms = 0.0;

    static ToolResult success(json payload);
    static ToolResult failure(std::string error);

    /// Wire form: {"status": "ok", "result": ...} or {"status": "error", "error": ...}.
    json to_json() const;
    /// Throws ProtocolError on documents of neither form.
    static ToolResult from_json(const json& doc);
    /// What an agent sees: the payload, or {"error": message}.
    json observation() const;
};

/// Maps each media-kind argument value to a file: "image-N" picks the N-th
/// entry of `media`; other strings must equal one of the entries. With
/// `placeholders_only`, anything but "image-N" is rejected. Throws
/// ValidationError naming the argument.
std::vector<MediaRef> resolve_media_refs(const ToolSpec& spec, const json& arguments,
                                         const std::vector<std::string>& media, bool placeholders_only = false);

class Backend {
public:
    virtual ~Backend() = default;
    /// Arguments have been validated and media resolved. May throw; the
    /// toolbox turns exceptions into error results.
    virtual ToolResult invoke(const ToolCall& call) = 0;
};

/// In-process tools: Terminate, SelfThinking (needs a core) and
/// EstimateHomographyMatrix (RANSAC over supplied matches or a matcher).
class NativeBackend : public Backend {
public:
    struct Options {
        llm::ChatClient* core = nullptr;
        llm::ChatConfig core_config;
        /// Backend serving MatchImagesSIFT, used when no matches are supplied.
        Backend* matcher = nullptr;
        geometry::RansacOptions ransac;  // reproj_threshold comes from the call
    };
    NativeBackend() = default;
    explicit NativeBackend(Options opts) : opts_(std::move(opts)) {}

    ToolResult invoke(const ToolCall& call) override;
    static std::vector<std::string> served();

private:
    ToolResult homography(const ToolCall& call);
    Options opts_;
};

/// Canned payloads keyed by (tool name, canonical arguments).
class MockBackend : public Backend {
public:
    /// `fixtures` is {"strict": bool, "fixtures": [{"name", "arguments",
    /// "result" | "error"}], "defaults": {tool: payload}}. Fixture arguments
    /// are normalized through the registry so key order, defaults and number
    /// spelling do not matter. Throws ValidationError on malformed fixtures.
    MockBackend(const Registry& registry, const json& fixtures);
    static MockBackend from_file(const Registry& registry, const std::filesystem::path& path);

    ToolResult invoke(const ToolCall& call) override;
    /// Tool names that have at least one fixture or default.
    std::vector<std::string> tool_names() const;
    bool strict() const { return strict_; }

private:
    static std::string key(const std::string& name, const json& normalized_args);

    std::map<std::string, ToolResult> table_;
    std::map<std::string, json> defaults_;
    bool strict_ = true;
};

/// Client side of the wire protocol: POST {base}/invoke, GET {base}/healthz.
class RemoteBackend : public Backend {
public:
    enum class Transfer { Path, Base64 };
    struct Options {
        std::string base_url;  // e.g. http://127.0.0.1:9100
        double timeout_seconds = 60.0;
        /// Preferred media transfer; the server's capability list decides.
        Transfer prefer = Transfer::Path;
    };
    explicit RemoteBackend(Options opts) : opts_(std::move(opts)) {}

    /// Transport failures become error results.
    ToolResult invoke(const ToolCall& call) override;
    /// GET /healthz; throws TransportError or ProtocolError.
    json health();

private:
    Transfer negotiate();

    Options opts_;
    std::mutex mu_;
    std::optional<Transfer> transfer_;
};

/// Registry plus routing. invoke() validates, resolves media, dispatches, and
/// never throws.
class Toolbox {
public:
    explicit Toolbox(Registry registry) : registry_(std::move(registry)) {}

    const Registry& registry() const { return registry_; }
    /// Backend for tools without an explicit route. Not owned.
    void set_default(Backend* backend) { default_ = backend; }
    void route(const std::string& tool, Backend* backend);

    ToolResult invoke(const std::string& name, const json& arguments, const std::vector<std::string>& media) const;
    /// Number of calls that reached a backend.
    std::size_t dispatched() const { return dispatched_.load(); }

private:
    Registry registry_;
    Backend* default_ = nullptr;
    std::map<std::string, Backend*> routes_;
    mutable std::atomic<std::size_t> dispatched_{0};
};

/// Serves a backend over the wire protocol on a background thread.
class ToolServer {
public:
    ToolServer(const Registry& registry, Backend& backend, std::vector<std::string> served);
    ~ToolServer();
    ToolServer(const ToolServer&) = delete;
    ToolServer& operator=(const ToolServer&) = delete;

    /// Binds and starts listening; port 0 picks a free one. Returns the bound
    /// port. Throws TransportError when binding fails.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks serving on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

    /// Handles one /invoke body; exposed for tests.
    json handle_invoke(const std::string& body) const;
    json health() const;

private:
    struct Impl;
    Registry registry_;
    Backend& backend_;
    std::vector<std::string> served_;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
};

}  // namespace spatialqa::tools
