#include "spatialqa/cli/cli.hpp"

#include "spatialqa/agent/agent.hpp"
#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/corpus/manifest.hpp"
#include "spatialqa/eval/eval.hpp"
#include "spatialqa/qagen/scene.hpp"
#include "spatialqa/qagen/simulators.hpp"
#include "spatialqa/tools/backends.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

namespace spatialqa::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
        dynamic_cast<const LoadError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const UnitError*>(&e) || dynamic_cast<const RegistryError*>(&e))
        return kExitValidation;
    return kExitRuntime;
}

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

/// What every artifact carries: tool version, seed, config hash and the
/// effective configuration it was hashed from.
struct RunInfo {
    std::uint64_t seed = 0;
    json config = json::object();
    std::string config_hash;

    json header() const {
        return {{"tool_version", std::string(kToolVersion)},
                {"seed", seed},
                {"config_hash", config_hash},
                {"config", config}};
    }
};

/// Options that only say where files live or how fast to work; they never
/// change artifact content and stay out of the hash.
const std::set<std::string> kOperational = {"help",     "out",      "media-root", "parallelism",
                                            "port-file", "duration", "json"};

RunInfo make_run_info(const CLI::App& sub, std::uint64_t seed) {
    RunInfo info;
    info.seed = seed;
    info.config["command"] = sub.get_name();
    for (const CLI::Option* opt : sub.get_options()) {
        std::string name = opt->get_single_name();
        if (name.empty() || kOperational.count(name)) continue;
        json value;
        if (opt->count() > 0) {
            std::vector<std::string> res = opt->results();
            if (opt->get_type_size() == 0)
                value = true;
            else if (opt->get_expected_max() > 1)
                value = res;
            else
                value = res.empty() ? "" : res.back();
        } else if (opt->get_type_size() == 0) {
            value = false;
        } else if (opt->get_expected_max() > 1) {
            value = json::array();
        } else {
            value = opt->get_default_str();
        }
        info.config[name] = value;
    }
    info.config_hash = sha256_hex(tools::canonical_json(info.config)).substr(0, 16);
    return info;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) {
    try {
        return json::parse(read_text(p));
    } catch (const json::parse_error& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

std::uint64_t stable_hash(std::string_view key) {
    return std::stoull(sha256_hex(key).substr(0, 16), nullptr, 16);
}

std::string safe_filename(std::string_view id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out;
}

/// Runs f(i) for i in [0, n) on up to `workers` threads; the first exception
/// is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
            }
        }
    };
    const std::size_t count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < count; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

/// Scripted responses: {"<sample id>": [...], "*": [...]} or a bare list
/// applied to every sample. Each sample gets its own copy.
class ScriptBook {
public:
    explicit ScriptBook(const fs::path& path) {
        json doc = read_json(path);
        if (doc.is_array()) doc = json{{"*", doc}};
        if (!doc.is_object()) throw ValidationError(path.string() + ": expected an object of response lists");
        for (auto& [id, list] : doc.items()) {
            if (!list.is_array()) throw ValidationError(path.string() + ": entry '" + id + "' is not a list");
            std::vector<std::string> v;
            for (const auto& r : list) {
                if (!r.is_string()) throw ValidationError(path.string() + ": entry '" + id + "' holds a non-string");
                v.push_back(r.get<std::string>());
            }
            book_[id] = std::move(v);
        }
    }
    std::vector<std::string> for_sample(const std::string& id) const {
        if (auto it = book_.find(id); it != book_.end()) return it->second;
        if (auto it = book_.find("*"); it != book_.end()) return it->second;
        return {};
    }

private:
    std::map<std::string, std::vector<std::string>> book_;
};

/// One chat client per sample: scripted clients are private, HTTP is shared.
class CoreSource {
public:
    CoreSource(const std::string& scripted, const std::string& endpoint) {
        if (!scripted.empty())
            book_ = std::make_unique<ScriptBook>(scripted);
        else if (!endpoint.empty())
            http_ = std::make_unique<llm::HttpChatClient>();
    }
    bool configured() const { return book_ || http_; }
    bool scripted() const { return static_cast<bool>(book_); }
    std::shared_ptr<llm::ChatClient> for_sample(const std::string& id) const {
        if (book_) return std::make_shared<llm::ScriptedClient>(book_->for_sample(id));
        return {http_.get(), [](llm::ChatClient*) {}};
    }

private:
    std::unique_ptr<ScriptBook> book_;
    std::unique_ptr<llm::HttpChatClient> http_;
};

fs::path require_dir(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError(what + " is required");
    if (!fs::is_directory(path)) throw ValidationError(what + " does not exist: " + path);
    return path;
}

void check_media(const corpus::Manifest& m, const fs::path& root) {
    std::vector<std::string> missing;
    for (const auto& s : m.samples)
        for (const auto& ref : s.media)
            if (!fs::exists(corpus::resolve_media(ref, root))) missing.push_back(s.id + ": " + ref);
    if (missing.empty()) return;
    std::string msg = std::to_string(missing.size()) + " media reference(s) do not resolve under '" + root.string() + "':";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += "\n  " + missing[i];
    throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::vector<std::string> scenes;
    std::vector<std::string> simulators;
    int per_task = 50;
    std::vector<std::string> scene_tasks;
    std::vector<std::string> formats;
    std::uint64_t seed = 0;
    std::string out;
    std::string media_root;
    int num_distractors = 3;
    std::string unit = "m";
    std::string name = "spatialqa-synthetic";
};

std::vector<fs::path> expand_scene_paths(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.emplace_back(in);
        }
    }
    return out;
}

int cmd_generate(const GenerateArgs& a, const RunInfo& info) {
    if (a.scenes.empty() && a.simulators.empty()) throw ValidationError("nothing to generate: pass --scenes and/or --simulators");
    if (a.out.empty()) throw ValidationError("--out is required");
    if (a.per_task < 0) throw ValidationError("--per-task must be >= 0");

    std::vector<qagen::Task> sims;
    for (const auto& s : a.simulators) {
        if (s == "all") {
            sims.assign(std::begin(qagen::kSimulatorTasks), std::end(qagen::kSimulatorTasks));
            continue;
        }
        qagen::Task t = qagen::task_from(s);
        if (std::find(std::begin(qagen::kSimulatorTasks), std::end(qagen::kSimulatorTasks), t) ==
            std::end(qagen::kSimulatorTasks))
            throw ValidationError("'" + s + "' is not a simulator task");
        sims.push_back(t);
    }
    std::sort(sims.begin(), sims.end());
    sims.erase(std::unique(sims.begin(), sims.end()), sims.end());

    std::vector<qagen::Task> scene_tasks;
    if (a.scene_tasks.empty()) scene_tasks.assign(std::begin(qagen::kSceneTasks), std::end(qagen::kSceneTasks));
    for (const auto& s : a.scene_tasks) scene_tasks.push_back(qagen::task_from(s));
    std::set<qagen::Format> formats;
    for (const auto& f : a.formats) formats.insert(qagen::format_from(f));
    if (formats.empty()) formats = {qagen::Format::Judgment, qagen::Format::MultiChoice, qagen::Format::OpenEnded};

    // Everything is validated before the first write.
    const fs::path root = a.media_root;
    if (!a.scenes.empty()) require_dir(a.media_root, "--media-root");
    if (!sims.empty() && a.media_root.empty()) throw ValidationError("--media-root is required to write simulator images");

    std::vector<qagen::SceneMeta> scenes;
    std::vector<std::pair<std::string, std::string>> bad;
    for (const auto& p : expand_scene_paths(a.scenes)) {
        try {
            qagen::SceneMeta sc = qagen::load_scene(p);
            for (const auto& f : sc.frames)
                if (!fs::exists(corpus::resolve_media(f.image, root)))
                    throw LoadError("frame image '" + f.image + "' not found under the media root");
            scenes.push_back(std::move(sc));
        } catch (const Error& e) {
            bad.emplace_back(p.string(), e.what());
        }
    }
    if (!bad.empty()) {
        for (const auto& [file, msg] : bad) std::cerr << "invalid scene " << file << ": " << msg << "\n";
        throw ValidationError(std::to_string(bad.size()) + " scene file(s) rejected; nothing written");
    }
    if (!a.scenes.empty() && scenes.empty()) throw ValidationError("--scenes matched no scene documents");

    qagen::GenerateOptions gopts;
    gopts.num_distractors = a.num_distractors;
    gopts.unit = a.unit;

    corpus::Manifest manifest;
    json per_task = json::object();
    json skipped = json::array();
    json items = json::array();
    auto bump = [&](qagen::Task t, const char* key) {
        json& slot = per_task[std::string(qagen::to_string(t))];
        if (slot.is_null()) slot = {{"generated", 0}, {"skipped", 0}};
        slot[key] = slot[key].get<int>() + 1;
    };

    for (const auto& sc : scenes) {
        for (qagen::Task task : scene_tasks) {
            for (qagen::Format fmt : qagen::formats_for(task)) {
                if (!formats.count(fmt)) continue;
                const std::string id =
                    sc.scene_id + "-" + std::string(qagen::to_string(task)) + "-" + std::string(qagen::to_string(fmt));
                Rng rng = Rng::derive(a.seed, stable_hash(id));
                try {
                    qagen::QAPair qa = qagen::generate_from_scene(sc, task, rng, fmt, gopts);
                    manifest.samples.push_back(corpus::sample_from_qa(qa, id));
                    items.push_back({{"id", id}, {"task", qagen::to_string(task)}, {"seed", qa.seed}});
                    bump(task, "generated");
                } catch (const UnsupportedTaskError& e) {
                    skipped.push_back({{"id", id}, {"reason", e.what()}});
                    bump(task, "skipped");
                } catch (const GenerationError& e) {
                    skipped.push_back({{"id", id}, {"reason", e.what()}});
                    bump(task, "skipped");
                }
            }
        }
    }

    for (qagen::Task task : sims) {
        const std::string tname(qagen::to_string(task));
        for (int i = 0; i < a.per_task; ++i) {
            std::ostringstream id_s;
            id_s << tname << "-" << std::setw(5) << std::setfill('0') << i;
            const std::string id = id_s.str();
            Rng rng = Rng::derive(a.seed, stable_hash("sim/" + id));
            qagen::SimItem item = qagen::simulate(task, rng);
            const std::string dir = "sim/" + tname + "/" + id;
            fs::create_directories(root / dir);
            item.qa.media.clear();
            for (const auto& img : item.images) {
                const std::string ref = dir + "/" + img.name + ".png";
                img.image.write_png(root / ref);
                item.qa.media.push_back(ref);
            }
            write_text(root / dir / "sidecar.json", item.sidecar.dump(2) + "\n");
            corpus::Sample s = corpus::sample_from_qa(item.qa, id);
            s.meta["sidecar"] = dir + "/sidecar.json";
            manifest.samples.push_back(std::move(s));
            items.push_back({{"id", id}, {"task", tname}, {"seed", item.qa.seed}});
            bump(task, "generated");
        }
    }

    manifest.info = info.header();
    manifest.info["name"] = a.name;
    manifest.info["counts"] = corpus::count_summary(manifest);
    manifest.validate();
    corpus::write_manifest(a.out, manifest);

    json ledger = info.header();
    ledger["per_task"] = per_task;
    ledger["skipped"] = skipped;
    ledger["items"] = items;
    ledger["total"] = manifest.samples.size();
    write_text(a.out + ".ledger.json", ledger.dump(2) + "\n");

    std::cout << "wrote " << manifest.samples.size() << " samples to " << a.out << " (" << skipped.size()
              << " skipped)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Responses files (evaluate input, agent output)

/// Reads {"id", "response"} lines; a {"run": ...} header line is skipped.
std::map<std::string, std::string> read_responses(const fs::path& path) {
    std::map<std::string, std::string> out;
    std::istringstream in(read_text(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("run")) continue;
        if (!j.contains("id") || !j["id"].is_string() || !j.contains("response") || !j["response"].is_string())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected string fields id and response");
        std::string id = j["id"];
        if (!out.emplace(id, j["response"].get<std::string>()).second)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" + id + "'");
    }
    return out;
}

std::string id_list(const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < std::min<std::size_t>(ids.size(), 20); ++i) s += (i ? ", " : "") + ids[i];
    if (ids.size() > 20) s += ", ... (" + std::to_string(ids.size()) + " total)";
    return s;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string manifest;
    std::string responses;
    bool random_baseline = false;
    std::string scripted;
    std::string core_endpoint;
    std::string model;
    bool blind = false;
    int max_frames = 32;
    int max_tokens = 512;
    bool judge = false;
    std::string judge_endpoint;
    std::string judge_model;
    std::string judge_scripted;
    double mra_start = 0.50;
    double mra_end = 0.95;
    double mra_interval = 0.05;
    std::uint64_t seed = 0;
    std::string out;
    int parallelism = 1;
    bool allow_missing = false;
    std::string media_root;
};

int cmd_evaluate(const EvaluateArgs& a, const RunInfo& info) {
    if (a.manifest.empty()) throw ValidationError("--manifest is required");
    if (a.out.empty()) throw ValidationError("--out is required");
    const int sources = !a.responses.empty() + a.random_baseline + !a.scripted.empty() + !a.core_endpoint.empty();
    if (sources != 1)
        throw ValidationError("pick exactly one response source: --responses, --random-baseline, --scripted or --core-endpoint");
    eval::MRAConfig mra{a.mra_start, a.mra_end, a.mra_interval};
    mra.validate();
    if (a.judge && a.judge_endpoint.empty() && a.judge_scripted.empty())
        throw ValidationError("--judge needs --judge-endpoint or --judge-scripted");

    corpus::Manifest m = corpus::load_manifest(a.manifest);
    const fs::path root = a.media_root;
    const bool querying = !a.scripted.empty() || !a.core_endpoint.empty();
    if (querying && !a.blind && !a.core_endpoint.empty()) check_media(m, root);

    const std::size_t n = m.samples.size();
    std::vector<std::string> responses(n);
    std::vector<bool> have(n, true);
    json warnings = json::array();

    if (!a.responses.empty()) {
        auto given = read_responses(a.responses);
        std::vector<std::string> unknown, missing;
        for (const auto& [id, _] : given)
            if (!m.find(id)) unknown.push_back(id);
        if (!unknown.empty()) throw ValidationError("responses for ids not in the manifest: " + id_list(unknown));
        for (std::size_t i = 0; i < n; ++i) {
            auto it = given.find(m.samples[i].id);
            if (it == given.end()) {
                have[i] = false;
                missing.push_back(m.samples[i].id);
            } else {
                responses[i] = it->second;
            }
        }
        if (!missing.empty() && !a.allow_missing)
            throw ValidationError("manifest ids without a response: " + id_list(missing));
    } else if (a.random_baseline) {
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng = Rng::derive(a.seed, stable_hash(m.samples[i].id));
            responses[i] = eval::random_baseline(m.samples[i], rng);
        }
    }

    llm::ChatConfig core_cfg;
    core_cfg.endpoint = a.core_endpoint;
    core_cfg.model = a.model;
    core_cfg.seed = a.seed;
    core_cfg.max_tokens = a.max_tokens;
    CoreSource core(a.scripted, a.core_endpoint);

    eval::JudgeConfig jcfg;
    jcfg.mra = mra;
    jcfg.chat.endpoint = a.judge_endpoint;
    jcfg.chat.model = a.judge_model;
    jcfg.chat.seed = a.seed;
    CoreSource judge_core(a.judge_scripted, a.judge_endpoint);

    std::vector<eval::ScoreRecord> records(n);
    std::mutex warn_mu;
    parallel_for(n, a.parallelism, [&](std::size_t i) {
        const corpus::Sample& s = m.samples[i];
        if (querying) {
            auto client = core.for_sample(s.id);
            try {
                responses[i] = client->chat({eval::build_turn(s, root, a.blind, a.max_frames)}, core_cfg);
            } catch (const Error& e) {
                std::lock_guard lock(warn_mu);
                warnings.push_back({{"id", s.id}, {"warning", std::string("core call failed: ") + e.what()}});
            }
        }
        if (!have[i]) return;
        eval::Judge judge;
        std::shared_ptr<llm::ChatClient> jclient;
        if (a.judge) {
            jclient = judge_core.for_sample(s.id);
            judge = [&](const corpus::Sample& smp, std::string_view pred) {
                return eval::judge_with_llm(smp.question, smp.answer, pred, smp.open_subtype, jcfg, *jclient);
            };
        }
        records[i] = eval::score_sample(s, responses[i], judge, mra);
    });

    std::sort(warnings.begin(), warnings.end(), [](const json& x, const json& y) { return x["id"] < y["id"]; });
    std::vector<eval::ScoreRecord> scored;
    for (std::size_t i = 0; i < n; ++i)
        if (have[i]) scored.push_back(records[i]);
    eval::Report report = eval::aggregate(scored, m);

    const fs::path out = a.out;
    fs::create_directories(out);
    std::string scores = json{{"run", info.header()}}.dump() + "\n";
    for (const auto& r : scored) scores += r.to_json().dump() + "\n";
    write_text(out / "scores.jsonl", scores);
    if (querying || a.random_baseline) {
        std::string text = json{{"run", info.header()}}.dump() + "\n";
        for (std::size_t i = 0; i < n; ++i)
            text += json{{"id", m.samples[i].id}, {"response", responses[i]}}.dump() + "\n";
        write_text(out / "responses.jsonl", text);
    }
    json doc = {{"run", info.header()}, {"report", report.to_json()}, {"warnings", warnings}};
    write_text(out / "report.json", doc.dump(2) + "\n");
    const std::string table = report.to_table();
    write_text(out / "report.txt", table);
    std::cout << table;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// agent

struct AgentArgs {
    std::string manifest;
    std::string paradigm = "plan-execute";
    int max_attempts = 3;
    int max_turns = 10;
    int max_frames = 32;
    int max_tokens = 4096;
    double temperature = 0.0;
    std::string scripted;
    std::string core_endpoint;
    std::string model;
    std::uint64_t seed = 0;
    std::string mock_tools;
    std::string tool_server;
    std::vector<std::string> tool_endpoints;
    int parallelism = 1;
    std::string out;
    std::string media_root;
};

int cmd_agent(const AgentArgs& a, const RunInfo& info) {
    if (a.manifest.empty()) throw ValidationError("--manifest is required");
    if (a.out.empty()) throw ValidationError("--out is required");
    if (a.scripted.empty() == a.core_endpoint.empty())
        throw ValidationError("pick exactly one core: --scripted or --core-endpoint");
    if (a.parallelism < 1) throw ValidationError("--parallelism must be >= 1");

    agent::AgentConfig cfg;
    cfg.paradigm = agent::paradigm_from(a.paradigm);
    cfg.max_attempts = a.max_attempts;
    cfg.max_turns = a.max_turns;
    cfg.max_frames = a.max_frames;
    cfg.core.endpoint = a.core_endpoint;
    cfg.core.model = a.model;
    cfg.core.seed = a.seed;
    cfg.core.max_tokens = a.max_tokens;
    cfg.core.temperature = a.temperature;
    cfg.validate();

    corpus::Manifest m = corpus::load_manifest(a.manifest);
    const fs::path root = a.media_root;
    const tools::Registry& registry = tools::register_catalog();

    // Shared tool backends; per-sample pieces are built inside the loop.
    std::unique_ptr<tools::MockBackend> mock;
    if (!a.mock_tools.empty()) mock = std::make_unique<tools::MockBackend>(tools::MockBackend::from_file(registry, a.mock_tools));
    std::unique_ptr<tools::RemoteBackend> server;
    if (!a.tool_server.empty()) server = std::make_unique<tools::RemoteBackend>(tools::RemoteBackend::Options{a.tool_server});
    std::map<std::string, std::unique_ptr<tools::RemoteBackend>> endpoints;
    for (const auto& spec : a.tool_endpoints) {
        auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
            throw ValidationError("--tool-endpoint expects NAME=URL, got '" + spec + "'");
        std::string name = spec.substr(0, eq);
        registry.at(name);
        endpoints[name] = std::make_unique<tools::RemoteBackend>(tools::RemoteBackend::Options{spec.substr(eq + 1)});
    }
    tools::Backend* fallback = mock ? static_cast<tools::Backend*>(mock.get()) : server.get();
    auto routed = [&](const std::string& tool) -> tools::Backend* {
        if (auto it = endpoints.find(tool); it != endpoints.end()) return it->second.get();
        return fallback;
    };
    const bool homography_native = !endpoints.count("EstimateHomographyMatrix") &&
                                   !(mock && std::ranges::count(mock->tool_names(), "EstimateHomographyMatrix"));

    CoreSource core(a.scripted, a.core_endpoint);
    if (!core.scripted()) llm::HttpChatClient::probe(cfg.core);

    const std::size_t n = m.samples.size();
    std::vector<agent::AgentResult> results(n);
    parallel_for(n, a.parallelism, [&](std::size_t i) {
        const corpus::Sample& s = m.samples[i];
        auto client = core.for_sample(s.id);
        tools::NativeBackend native({client.get(), cfg.core, routed("MatchImagesSIFT"), {}});
        tools::Toolbox box(registry);
        box.set_default(fallback);
        for (const auto& [name, backend] : endpoints) box.route(name, backend.get());
        box.route("Terminate", &native);
        box.route("SelfThinking", &native);
        if (homography_native) box.route("EstimateHomographyMatrix", &native);
        agent::Agent ag(cfg, *client, box);
        results[i] = ag.run(s, root);
    });

    const fs::path out = a.out;
    fs::create_directories(out / "traces");
    std::string answers = json{{"run", info.header()}}.dump() + "\n";
    std::map<std::string, int> statuses;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = results[i];
        const std::string status(agent::to_string(r.status));
        ++statuses[status];
        answers += json{{"id", m.samples[i].id}, {"response", r.answer}, {"status", status}}.dump() + "\n";
        json doc = {{"run", info.header()}, {"trace", r.trace.to_json()}};
        write_text(out / "traces" / (safe_filename(m.samples[i].id) + ".json"), doc.dump(2) + "\n");
    }
    write_text(out / "answers.jsonl", answers);
    json summary = {{"run", info.header()}, {"samples", n}, {"statuses", statuses}};
    write_text(out / "summary.json", summary.dump(2) + "\n");
    std::cout << "ran " << n << " samples (" << agent::to_string(cfg.paradigm) << "):";
    for (const auto& [k, v] : statuses) std::cout << " " << k << "=" << v;
    std::cout << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats, report

int cmd_stats(const std::string& manifest_path, const std::string& json_out, const RunInfo& info) {
    if (manifest_path.empty()) throw ValidationError("--manifest is required");
    corpus::Manifest m = corpus::load_manifest(manifest_path);
    corpus::StatsReport st = corpus::stats(m);
    std::cout << st.to_table();
    if (!json_out.empty()) {
        json doc = {{"run", info.header()}, {"manifest", m.info}, {"stats", st.to_json()}};
        write_text(json_out, doc.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_report(const std::string& traces_dir, const std::string& json_out, const RunInfo& info) {
    const fs::path dir = require_dir(traces_dir, "--traces");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("no trace files in " + dir.string());

    std::map<std::string, int> statuses, paradigms, tool_calls;
    double turns = 0, attempts = 0, calls = 0;
    int fallback = 0, downgraded = 0, with_warnings = 0;
    for (const auto& f : files) {
        json doc = read_json(f);
        const json& t = doc.contains("trace") ? doc["trace"] : doc;
        if (!t.contains("status") || !t.contains("calls")) throw ValidationError(f.string() + ": not an agent trace");
        ++statuses[t["status"].get<std::string>()];
        ++paradigms[t.value("paradigm", "?")];
        turns += t.value("turns", 0);
        attempts += t.contains("attempts") ? t["attempts"].size() : 0;
        calls += t["calls"].size();
        fallback += t.value("fallback", false);
        downgraded += t.value("downgraded", false);
        with_warnings += !t.value("warnings", json::array()).empty();
        for (const auto& a : t.value("attempts", json::array()))
            for (const auto& s : a["steps"]) ++tool_calls[s["name"].get<std::string>()];
        for (const auto& mem : t.value("memory", json::array()))
            for (const auto& act : mem["actions"]) ++tool_calls[act["name"].get<std::string>()];
    }
    const double count = static_cast<double>(files.size());
    std::ostringstream tab;
    auto row = [&](const std::string& k, const std::string& v) { tab << std::left << std::setw(28) << k << v << "\n"; };
    row("traces", std::to_string(files.size()));
    for (const auto& [k, v] : paradigms) row("paradigm " + k, std::to_string(v));
    for (const auto& [k, v] : statuses) row("status " + k, std::to_string(v));
    row("mean core calls", format_fixed(calls / count, 2));
    row("mean turns", format_fixed(turns / count, 2));
    row("mean attempts", format_fixed(attempts / count, 2));
    row("fallback", std::to_string(fallback));
    row("downgraded", std::to_string(downgraded));
    row("with warnings", std::to_string(with_warnings));
    for (const auto& [k, v] : tool_calls) row("tool " + k, std::to_string(v));
    std::cout << tab.str();
    if (!json_out.empty()) {
        json doc = {{"run", info.header()},
                    {"traces", files.size()},
                    {"paradigms", paradigms},
                    {"statuses", statuses},
                    {"mean_calls", calls / count},
                    {"mean_turns", turns / count},
                    {"mean_attempts", attempts / count},
                    {"fallback", fallback},
                    {"downgraded", downgraded},
                    {"with_warnings", with_warnings},
                    {"tool_calls", tool_calls}};
        write_text(json_out, doc.dump(2) + "\n");
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// serve-mock-tools

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_serve(const std::string& fixtures, const std::string& host, int port, const std::string& port_file,
              double duration) {
    if (fixtures.empty()) throw ValidationError("--fixtures is required");
    const tools::Registry& registry = tools::register_catalog();
    tools::MockBackend mock = tools::MockBackend::from_file(registry, fixtures);
    tools::ToolServer server(registry, mock, mock.tool_names());
    const int bound = server.start(host, port);
    if (!port_file.empty()) write_text(port_file, std::to_string(bound) + "\n");
    std::cout << "serving " << mock.tool_names().size() << " mock tools on " << host << ":" << bound << std::endl;

    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const auto start = std::chrono::steady_clock::now();
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (duration > 0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration) break;
    }
    server.stop();
    return kExitOk;
}

/// Environment fallbacks for flags. They are injected as command-line
/// arguments when the flag itself is absent, which places them above the
/// config file and below explicit flags.
struct EnvFlag {
    const char* command;
    const char* flag;
    const char* env;
};
constexpr EnvFlag kEnvFlags[] = {
    {"generate", "--media-root", "SPATIALQA_MEDIA_ROOT"},
    {"evaluate", "--media-root", "SPATIALQA_MEDIA_ROOT"},
    {"evaluate", "--core-endpoint", "SPATIALQA_CORE_ENDPOINT"},
    {"evaluate", "--model", "SPATIALQA_CORE_MODEL"},
    {"evaluate", "--judge-endpoint", "SPATIALQA_JUDGE_ENDPOINT"},
    {"evaluate", "--judge-model", "SPATIALQA_JUDGE_MODEL"},
    {"agent", "--media-root", "SPATIALQA_MEDIA_ROOT"},
    {"agent", "--core-endpoint", "SPATIALQA_CORE_ENDPOINT"},
    {"agent", "--model", "SPATIALQA_CORE_MODEL"},
    {"agent", "--tool-server", "SPATIALQA_TOOL_SERVER"},
};

std::vector<std::string> with_env_flags(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string command;
    for (std::size_t i = 1; i < args.size() && command.empty(); ++i)
        for (const auto& ef : kEnvFlags)
            if (args[i] == ef.command) command = ef.command;
    if (command.empty()) return args;
    for (const auto& ef : kEnvFlags) {
        if (command != ef.command) continue;
        const char* value = std::getenv(ef.env);
        if (!value || !*value) continue;
        const std::string flag = ef.flag;
        const bool given = std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
            return a == flag || starts_with(a, flag + "=");
        });
        if (!given) {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Synthetic spatial QA generation, evaluation and tool-using agents"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_config("--config", "", "TOML configuration file; flags and environment take precedence");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Compile scenes and simulators into a manifest");
    g->option_defaults()->always_capture_default();
    g->add_option("--scenes", gen.scenes, "Scene documents or directories of them");
    g->add_option("--simulators", gen.simulators, "Simulator tasks, or 'all'");
    g->add_option("--per-task", gen.per_task, "Items per simulator task");
    g->add_option("--scene-tasks", gen.scene_tasks, "Scene tasks (default: all)");
    g->add_option("--formats", gen.formats, "judgment | multi-choice | open-ended (default: all)");
    g->add_option("--seed", gen.seed, "Base seed");
    g->add_option("--out", gen.out, "Manifest path; the ledger goes next to it");
    g->add_option("--media-root", gen.media_root, "Media root for scene frames and simulator images");
    g->add_option("--num-distractors", gen.num_distractors, "Wrong options per multi-choice item");
    g->add_option("--unit", gen.unit, "Display unit for metric answers");
    g->add_option("--name", gen.name, "Dataset name for the manifest header");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Score responses against a manifest");
    e->option_defaults()->always_capture_default();
    e->add_option("--manifest", ev.manifest, "Manifest to score against");
    e->add_option("--responses", ev.responses, "JSONL of {id, response}");
    e->add_flag("--random-baseline", ev.random_baseline, "Score chance-level responses");
    e->add_option("--scripted", ev.scripted, "Scripted core responses (JSON)");
    e->add_option("--core-endpoint", ev.core_endpoint, "OpenAI-compatible base URL");
    e->add_option("--model", ev.model, "Core model name");
    e->add_flag("--blind", ev.blind, "Send questions without media");
    e->add_option("--max-frames", ev.max_frames, "Frames per video sample");
    e->add_option("--max-tokens", ev.max_tokens, "Core output token limit");
    e->add_flag("--judge", ev.judge, "Fuse an LLM judge into open-ended scores");
    e->add_option("--judge-endpoint", ev.judge_endpoint, "Judge base URL");
    e->add_option("--judge-model", ev.judge_model, "Judge model name");
    e->add_option("--judge-scripted", ev.judge_scripted, "Scripted judge responses (JSON)");
    e->add_option("--mra-start", ev.mra_start, "First MRA threshold");
    e->add_option("--mra-end", ev.mra_end, "Last MRA threshold");
    e->add_option("--mra-interval", ev.mra_interval, "MRA threshold step");
    e->add_option("--seed", ev.seed, "Seed for baselines and core requests");
    e->add_option("--out", ev.out, "Output directory");
    e->add_option("--parallelism", ev.parallelism, "Concurrent samples");
    e->add_flag("--allow-missing", ev.allow_missing, "Score manifest ids without a response as 0");
    e->add_option("--media-root", ev.media_root, "Media root");

    AgentArgs ag;
    auto* a = app.add_subcommand("agent", "Run a tool-using agent over a manifest");
    a->option_defaults()->always_capture_default();
    a->add_option("--manifest", ag.manifest, "Manifest to answer");
    a->add_option("--paradigm", ag.paradigm, "plan-execute | react");
    a->add_option("--max-attempts", ag.max_attempts, "Plan-Execute attempts before the direct fallback");
    a->add_option("--max-turns", ag.max_turns, "ReAct turn limit");
    a->add_option("--max-frames", ag.max_frames, "Frames per video sample");
    a->add_option("--max-tokens", ag.max_tokens, "Core output token limit");
    a->add_option("--temperature", ag.temperature, "Core sampling temperature");
    a->add_option("--scripted", ag.scripted, "Scripted core responses (JSON)");
    a->add_option("--core-endpoint", ag.core_endpoint, "OpenAI-compatible base URL");
    a->add_option("--model", ag.model, "Core model name");
    a->add_option("--seed", ag.seed, "Seed sent with core requests");
    a->add_option("--mock-tools", ag.mock_tools, "Tool fixtures (JSON)");
    a->add_option("--tool-server", ag.tool_server, "Tool server base URL");
    a->add_option("--tool-endpoint", ag.tool_endpoints, "Per-tool server, NAME=URL (repeatable)");
    a->add_option("--parallelism", ag.parallelism, "Concurrent samples");
    a->add_option("--out", ag.out, "Output directory");
    a->add_option("--media-root", ag.media_root, "Media root");

    std::string stats_manifest, stats_json;
    auto* s = app.add_subcommand("stats", "Summarize a manifest");
    s->add_option("--manifest", stats_manifest, "Manifest path");
    s->add_option("--json", stats_json, "Also write the summary as JSON");

    std::string report_traces, report_json;
    auto* r = app.add_subcommand("report", "Summarize agent trace files");
    r->add_option("--traces", report_traces, "Directory of trace files");
    r->add_option("--json", report_json, "Also write the summary as JSON");

    std::string fixtures, host = "127.0.0.1", port_file;
    int port = 9100;
    double duration = 0.0;
    auto* v = app.add_subcommand("serve-mock-tools", "Serve tool fixtures over the tool wire protocol");
    v->option_defaults()->always_capture_default();
    v->add_option("--fixtures", fixtures, "Tool fixtures (JSON)");
    v->add_option("--host", host, "Bind address");
    v->add_option("--port", port, "Port; 0 picks a free one");
    v->add_option("--port-file", port_file, "Write the bound port here");
    v->add_option("--duration", duration, "Stop after this many seconds (0: until signalled)");

    const std::vector<std::string> args = with_env_flags(argc, argv);
    std::vector<const char*> cargs;
    for (const auto& x : args) cargs.push_back(x.c_str());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (g->parsed()) return cmd_generate(gen, make_run_info(*g, gen.seed));
        if (e->parsed()) return cmd_evaluate(ev, make_run_info(*e, ev.seed));
        if (a->parsed()) return cmd_agent(ag, make_run_info(*a, ag.seed));
        if (s->parsed()) return cmd_stats(stats_manifest, stats_json, make_run_info(*s, 0));
        if (r->parsed()) return cmd_report(report_traces, report_json, make_run_info(*r, 0));
        if (v->parsed()) return cmd_serve(fixtures, host, port, port_file, duration);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return exit_code_for(ex);
    }
    return kExitValidation;
}

}  // namespace spatialqa::cli
