#include "spatialqa/tools/backends.hpp"

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace spatialqa::tools {

// ---------------------------------------------------------------------------
// ToolResult

ToolResult ToolResult::success(json payload) {
    ToolResult r;
    r.ok = true;
    r.payload = std::move(payload);
    return r;
}

ToolResult ToolResult::failure(std::string error) {
    ToolResult r;
    r.ok = false;
    r.error = std::move(error);
    return r;
}

json ToolResult::to_json() const {
    if (ok) return json{{"status", "ok"}, {"result", payload}};
    return json{{"status", "error"}, {"error", error}};
}

ToolResult ToolResult::from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("status") || !doc["status"].is_string()) {
        throw ProtocolError("tool response lacks a status");
    }
    const auto status = doc["status"].get<std::string>();
    if (status == "ok") {
        if (!doc.contains("result")) throw ProtocolError("ok tool response lacks a result");
        return success(doc["result"]);
    }
    if (status == "error") {
        if (!doc.contains("error") || !doc["error"].is_string()) throw ProtocolError("error tool response lacks a message");
        return failure(doc["error"].get<std::string>());
    }
    throw ProtocolError("unknown tool response status '" + status + "'");
}

json ToolResult::observation() const { return ok ? payload : json{{"error", error}}; }

// ---------------------------------------------------------------------------
// Media resolution

std::vector<MediaRef> resolve_media_refs(const ToolSpec& spec, const json& arguments,
                                         const std::vector<std::string>& media, bool placeholders_only) {
    static const std::regex placeholder(R"(image-(\d+))");
    std::vector<MediaRef> out;
    auto add = [&](const ArgSpec& a, const std::string& ref) {
        for (const auto& m : out) {
            if (m.ref == ref) return;
        }
        std::smatch m;
        if (std::regex_match(ref, m, placeholder)) {
            const auto idx = std::stoull(m.str(1));
            if (idx >= media.size()) {
                throw ValidationError("argument '" + a.name + "': " + ref + " is out of range (" +
                                      std::to_string(media.size()) + " media provided)");
            }
            out.push_back({ref, media[idx]});
            return;
        }
        if (placeholders_only) {
            throw ValidationError("argument '" + a.name + "': media must be referenced as image-N, got '" + ref + "'");
        }
        for (const auto& p : media) {
            if (p == ref) {
                out.push_back({ref, p});
                return;
            }
        }
        throw ValidationError("argument '" + a.name + "': '" + ref + "' is not one of the provided media");
    };
    for (const auto& a : spec.args) {
        if (!is_media_kind(a.kind) || !arguments.contains(a.name)) continue;
        const auto& v = arguments[a.name];
        if (v.is_string()) {
            add(a, v.get<std::string>());
        } else if (v.is_array()) {
            for (const auto& x : v) add(a, x.get<std::string>());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Native

std::vector<std::string> NativeBackend::served() { return {"Terminate", "SelfThinking", "EstimateHomographyMatrix"}; }

ToolResult NativeBackend::invoke(const ToolCall& call) {
    if (call.name == "Terminate") return ToolResult::success(json{{"answer", call.arguments.at("answer")}});
    if (call.name == "SelfThinking") {
        if (!opts_.core) return ToolResult::failure("SelfThinking needs an agent core");
        llm::ChatTurn turn{llm::Role::User, call.arguments.at("query").get<std::string>(), {}};
        for (const auto& m : call.media) turn.media.push_back(m.path);
        return ToolResult::success(json{{"response", opts_.core->chat({turn}, opts_.core_config)}});
    }
    if (call.name == "EstimateHomographyMatrix") return homography(call);
    return ToolResult::failure("tool '" + call.name + "' has no native implementation");
}

ToolResult NativeBackend::homography(const ToolCall& call) {
    json raw;
    if (call.arguments.contains("matches")) {
        raw = call.arguments["matches"];
    } else {
        if (!opts_.matcher) return ToolResult::failure("EstimateHomographyMatrix needs matches or a matcher");
        ToolCall m;
        m.name = "MatchImagesSIFT";
        m.arguments = {{"image", call.arguments.at("image")},
                       {"num_keypoints", call.arguments.at("num_keypoints")},
                       {"ratio_th", call.arguments.at("ratio_th")}};
        m.media = call.media;
        const auto res = opts_.matcher->invoke(m);
        if (!res.ok) return ToolResult::failure("matching failed: " + res.error);
        if (!res.payload.contains("matches")) return ToolResult::failure("matcher returned no matches field");
        raw = res.payload["matches"];
    }
    std::vector<geometry::PointMatch> matches;
    for (const auto& m : raw) {
        matches.push_back({{m[0][0].get<double>(), m[0][1].get<double>()}, {m[1][0].get<double>(), m[1][1].get<double>()}});
    }
    const auto total = static_cast<int>(matches.size());
    json out{{"total_matches", total}};
    try {
        auto opts = opts_.ransac;
        opts.reproj_threshold = call.arguments.at("ransac_reproj_threshold").get<double>();
        const auto r = geometry::ransac_homography(matches, opts);
        json h = json::array();
        for (int i = 0; i < 3; ++i) h.push_back({r.homography(i, 0), r.homography(i, 1), r.homography(i, 2)});
        out["homography_matrix"] = h;
        out["inliers_count"] = r.inlier_count;
        out["status"] = "success";
    } catch (const Error& e) {
        out["homography_matrix"] = nullptr;
        out["inliers_count"] = 0;
        out["status"] = std::string("failure: ") + e.what();
    }
    return ToolResult::success(out);
}

// ---------------------------------------------------------------------------
// Mock

std::string MockBackend::key(const std::string& name, const json& normalized_args) {
    return name + "\n" + canonical_json(normalized_args);
}

MockBackend::MockBackend(const Registry& registry, const json& fixtures) {
    if (!fixtures.is_object()) throw ValidationError("mock fixtures must be an object");
    strict_ = fixtures.value("strict", true);
    if (fixtures.contains("defaults")) {
        for (const auto& [name, payload] : fixtures["defaults"].items()) {
            registry.at(name);
            defaults_[name] = payload;
        }
    }
    const auto list = fixtures.value("fixtures", json::array());
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& f = list[i];
        const std::string where = "fixture " + std::to_string(i) + ": ";
        try {
            const auto& spec = registry.at(f.at("name").get<std::string>());
            const auto args = validate_arguments(spec, f.value("arguments", json::object()));
            ToolResult r;
            if (f.contains("result")) {
                r = ToolResult::success(f["result"]);
            } else if (f.contains("error")) {
                r = ToolResult::failure(f["error"].get<std::string>());
            } else {
                throw ValidationError("needs a result or an error");
            }
            table_[key(spec.name, args)] = std::move(r);
        } catch (const json::exception& e) {
            throw ValidationError(where + e.what());
        } catch (const Error& e) {
            throw ValidationError(where + e.what());
        }
    }
}

MockBackend MockBackend::from_file(const Registry& registry, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open mock fixtures: " + path.string());
    try {
        return MockBackend(registry, json::parse(in));
    } catch (const json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

ToolResult MockBackend::invoke(const ToolCall& call) {
    if (const auto it = table_.find(key(call.name, call.arguments)); it != table_.end()) return it->second;
    if (const auto it = defaults_.find(call.name); it != defaults_.end()) return ToolResult::success(it->second);
    if (strict_) return ToolResult::failure("no fixture for " + call.name + " " + canonical_json(call.arguments));
    return ToolResult::success(json{{"note", "no fixture for this call"}});
}

std::vector<std::string> MockBackend::tool_names() const {
    std::set<std::string> names;
    for (const auto& [k, _] : table_) names.insert(k.substr(0, k.find('\n')));
    for (const auto& [k, _] : defaults_) names.insert(k);
    return {names.begin(), names.end()};
}

// ---------------------------------------------------------------------------
// Remote

namespace {

struct Endpoint {
    std::string origin;
    std::string path;
};

Endpoint split_endpoint(const std::string& base) {
    const auto scheme = base.find("://");
    if (scheme == std::string::npos) throw ConfigError("tool endpoint must include a scheme: " + base);
    const auto slash = base.find('/', scheme + 3);
    Endpoint e{base.substr(0, slash), slash == std::string::npos ? "" : base.substr(slash)};
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    return e;
}

void set_timeouts(httplib::Client& cli, double seconds) {
    const auto secs = static_cast<time_t>(seconds);
    const auto usecs = static_cast<time_t>((seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TransportError("cannot read media file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

json RemoteBackend::health() {
    const auto ep = split_endpoint(opts_.base_url);
    httplib::Client cli(ep.origin);
    set_timeouts(cli, opts_.timeout_seconds);
    auto res = cli.Get(ep.path + "/healthz");
    if (!res) throw TransportError("healthz: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProtocolError("healthz: HTTP " + std::to_string(res->status));
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("healthz: ") + e.what());
    }
}

RemoteBackend::Transfer RemoteBackend::negotiate() {
    std::lock_guard lock(mu_);
    if (transfer_) return *transfer_;
    const auto doc = health();
    const auto caps = doc.value("media_transfer", json::array({"base64"}));
    auto has = [&](const char* c) {
        for (const auto& x : caps) {
            if (x == c) return true;
        }
        return false;
    };
    if (opts_.prefer == Transfer::Path && has("path")) {
        transfer_ = Transfer::Path;
    } else if (has("base64")) {
        transfer_ = Transfer::Base64;
    } else if (has("path")) {
        transfer_ = Transfer::Path;
    } else {
        throw ProtocolError("tool server offers no known media transfer");
    }
    return *transfer_;
}

ToolResult RemoteBackend::invoke(const ToolCall& call) {
    try {
        const auto ep = split_endpoint(opts_.base_url);
        json media = json::array();
        if (!call.media.empty()) {
            const auto transfer = negotiate();
            for (const auto& m : call.media) {
                if (transfer == Transfer::Path) {
                    media.push_back({{"ref", m.ref}, {"transfer", "path"}, {"path", m.path}});
                } else {
                    media.push_back({{"ref", m.ref},
                                     {"transfer", "base64"},
                                     {"filename", std::filesystem::path(m.path).filename().string()},
                                     {"data", base64_encode(slurp(m.path))}});
                }
            }
        }
        const json body{{"name", call.name}, {"arguments", call.arguments}, {"media", media}};
        httplib::Client cli(ep.origin);
        set_timeouts(cli, opts_.timeout_seconds);
        auto res = cli.Post(ep.path + "/invoke", body.dump(), "application/json");
        if (!res) return ToolResult::failure("transport failure: " + httplib::to_string(res.error()));
        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::parse_error&) {
            return ToolResult::failure("HTTP " + std::to_string(res->status) + ": unparsable tool response");
        }
        if (res->status != 200 && !(doc.is_object() && doc.value("status", "") == "error")) {
            return ToolResult::failure("HTTP " + std::to_string(res->status));
        }
        return ToolResult::from_json(doc);
    } catch (const std::exception& e) {
        return ToolResult::failure(e.what());
    }
}

// ---------------------------------------------------------------------------
// Toolbox

void Toolbox::route(const std::string& tool, Backend* backend) {
    registry_.at(tool);
    routes_[tool] = backend;
}

ToolResult Toolbox::invoke(const std::string& name, const json& arguments, const std::vector<std::string>& media) const {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](ToolResult r) {
        r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return r;
    };
    try {
        const auto* spec = registry_.find(name);
        if (!spec) return finish(ToolResult::failure("unknown tool '" + name + "'"));
        ToolCall call;
        call.name = name;
        call.arguments = validate_arguments(*spec, arguments);
        call.media = resolve_media_refs(*spec, call.arguments, media);
        Backend* backend = default_;
        if (const auto it = routes_.find(name); it != routes_.end()) backend = it->second;
        if (!backend) return finish(ToolResult::failure("no backend configured for " + name));
        ++dispatched_;
        return finish(backend->invoke(call));
    } catch (const std::exception& e) {
        return finish(ToolResult::failure(e.what()));
    } catch (...) {
        return finish(ToolResult::failure("unknown failure in " + name));
    }
}

// ---------------------------------------------------------------------------
// Server

struct ToolServer::Impl {
    httplib::Server server;
    std::filesystem::path spool;
    mutable std::mutex spool_mu;
};

ToolServer::ToolServer(const Registry& registry, Backend& backend, std::vector<std::string> served)
    : registry_(registry), backend_(backend), served_(std::move(served)), impl_(std::make_unique<Impl>()) {
    for (const auto& n : served_) registry_.at(n);
    auto& srv = impl_->server;
    // httplib's default also sets SO_REUSEPORT, which lets a second server
    // share a port that is already taken.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    srv.Post("/invoke", [this](const httplib::Request& req, httplib::Response& res) {
        const auto doc = handle_invoke(req.body);
        res.status = doc.value("http_status", 200);
        json body = doc;
        body.erase("http_status");
        res.set_content(body.dump(), "application/json");
    });
    srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(health().dump(), "application/json");
    });
}

ToolServer::~ToolServer() { stop(); }

json ToolServer::health() const {
    return json{{"tools", served_}, {"media_transfer", {"path", "base64"}}};
}

json ToolServer::handle_invoke(const std::string& body) const {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::parse_error& e) {
        return {{"status", "error"}, {"error", std::string("malformed request: ") + e.what()}, {"http_status", 400}};
    }
    if (!req.is_object() || !req.contains("name") || !req["name"].is_string()) {
        return {{"status", "error"}, {"error", "malformed request: missing tool name"}, {"http_status", 400}};
    }
    const auto name = req["name"].get<std::string>();
    if (std::find(served_.begin(), served_.end(), name) == served_.end() || !registry_.find(name)) {
        return {{"status", "error"}, {"error", "unknown tool '" + name + "'"}, {"http_status", 404}};
    }
    try {
        ToolCall call;
        call.name = name;
        call.arguments = validate_arguments(registry_.at(name), req.value("arguments", json::object()));
        for (const auto& m : req.value("media", json::array())) {
            const auto ref = m.at("ref").get<std::string>();
            const auto transfer = m.value("transfer", "path");
            if (transfer == "path") {
                call.media.push_back({ref, m.at("path").get<std::string>()});
            } else if (transfer == "base64") {
                const auto data = base64_decode(m.at("data").get<std::string>());
                const auto ext = std::filesystem::path(m.value("filename", "media.bin")).extension().string();
                std::lock_guard lock(impl_->spool_mu);
                if (impl_->spool.empty()) {
                    impl_->spool = std::filesystem::temp_directory_path() /
                                   ("spatialqa-tools-" + sha256_hex(std::to_string(reinterpret_cast<std::uintptr_t>(this)))
                                                             .substr(0, 12));
                    std::filesystem::create_directories(impl_->spool);
                }
                const auto path = impl_->spool / (sha256_hex(data) + ext);
                std::ofstream(path, std::ios::binary) << data;
                call.media.push_back({ref, path.string()});
            } else {
                throw ValidationError("media '" + ref + "': unknown transfer '" + transfer + "'");
            }
        }
        return backend_.invoke(call).to_json();
    } catch (const std::exception& e) {
        return {{"status", "error"}, {"error", e.what()}, {"http_status", 400}};
    }
}

int ToolServer::start(const std::string& host, int port) {
    auto& srv = impl_->server;
    const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw TransportError("cannot bind tool server to " + host + ":" + std::to_string(port));
    thread_ = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return bound;
}

void ToolServer::run(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (!srv.bind_to_port(host, port)) throw TransportError("cannot bind tool server to " + host + ":" + std::to_string(port));
    srv.listen_after_bind();
}

void ToolServer::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace spatialqa::tools
