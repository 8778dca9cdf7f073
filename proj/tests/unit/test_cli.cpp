#include <gtest/gtest.h>

#include "spatialqa/cli/cli.hpp"
#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/eval/eval.hpp"
#include "spatialqa/corpus/manifest.hpp"
#include "spatialqa/tools/backends.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace spatialqa;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kData = SPATIALQA_TEST_DATA_DIR;
const std::string kMocks = kData + "/fixtures/tools/golden_mocks.json";

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "spatialqa");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

std::vector<json> jsonl(const fs::path& p) {
    std::vector<json> out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

/// Fresh scratch directory per test.
class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() /
              ("spatialqa_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& rel) const { return (dir / rel).string(); }

    fs::path dir;
};

void expect_run_header(const json& h) {
    EXPECT_EQ(h.at("tool_version"), std::string(cli::kToolVersion));
    EXPECT_TRUE(h.at("seed").is_number_unsigned());
    EXPECT_EQ(h.at("config_hash").get<std::string>().size(), 16u);
    EXPECT_TRUE(h.at("config").is_object());
}

/// Placeholder frame files so scene fixtures resolve.
void touch_scene_media(const fs::path& root) {
    for (const auto& e : fs::directory_iterator(kData + "/fixtures/scenes")) {
        json doc = json::parse(slurp(e.path()));
        for (const auto& f : doc["frames"]) spit(root / f["image"].get<std::string>(), "");
    }
}

corpus::Sample dog_cat(const std::string& id) {
    corpus::Sample s;
    s.id = id;
    s.question = "Which object is closer to the camera, the dog or the cat?";
    s.format = qagen::Format::MultiChoice;
    s.options = {"The dog", "The cat"};
    s.answer = "A";
    s.media = {"scenes/dog_cat.jpg"};
    s.task = "rel_depth";
    s.category = "Depth Estimation";
    s.source = "fixture";
    return s;
}

const std::string kPlan =
    "```json\n[{\"name\": \"LocalizeObjects\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"dog\", \"cat\"]}},"
    "{\"name\": \"EstimateObjectDepth\", \"arguments\": {\"image\": \"image-0\", \"objects\": [\"dog\", \"cat\"], "
    "\"indoor_or_outdoor\": \"outdoor\"}}]\n```";
const std::string kCot = "<think> The dog is at 1.0 m and the cat at 1.2 m. </think>";
const std::string kSummary = "<thinking> dog is closer </thinking><answer>(A)</answer>";
const std::string kFlowTurn =
    "{\"thought\": \"flow\", \"actions\": [{\"name\": \"EstimateOpticalFlow\", \"arguments\": {\"images\": "
    "[\"image-0\", \"image-0\"]}}]}";

}  // namespace

// ---------------------------------------------------------------------------
// generate

TEST_F(Cli, GenerateSimulatorsIsByteIdentical) {
    const std::vector<std::string> base = {"generate", "--simulators", "all", "--per-task", "50", "--seed", "42",
                                           "--media-root", at("media")};
    auto run = [&](const std::string& out) {
        auto args = base;
        args.insert(args.end(), {"--out", out});
        return run_cli(args);
    };
    ASSERT_EQ(run(at("a/m.jsonl")), 0);
    const std::string media_digest = slurp(dir / "media/sim/rotation3d/rotation3d-00007/reference.png");
    ASSERT_EQ(run(at("b/m.jsonl")), 0);
    EXPECT_EQ(slurp(at("a/m.jsonl")), slurp(at("b/m.jsonl")));
    EXPECT_EQ(slurp(at("a/m.jsonl.ledger.json")), slurp(at("b/m.jsonl.ledger.json")));
    EXPECT_EQ(media_digest, slurp(dir / "media/sim/rotation3d/rotation3d-00007/reference.png"));

    corpus::Manifest m = corpus::load_manifest(at("a/m.jsonl"), {true, at("media")});
    EXPECT_EQ(m.samples.size(), 200u);
    expect_run_header(m.info);
    EXPECT_EQ(m.info["seed"], 42u);

    // A different seed changes content and the recorded triple.
    auto args = base;
    args[6] = "43";
    args.insert(args.end(), {"--out", at("c/m.jsonl")});
    ASSERT_EQ(run_cli(args), 0);
    EXPECT_NE(slurp(at("a/m.jsonl")), slurp(at("c/m.jsonl")));
    EXPECT_NE(corpus::load_manifest(at("c/m.jsonl")).info["config_hash"], m.info["config_hash"]);
}

TEST_F(Cli, GenerateScenesLedgerMatchesStats) {
    touch_scene_media(dir / "media");
    ASSERT_EQ(run_cli({"generate", "--scenes", kData + "/fixtures/scenes", "--seed", "3", "--media-root", at("media"),
                   "--out", at("scenes.jsonl")}),
              0);
    corpus::Manifest m = corpus::load_manifest(at("scenes.jsonl"));
    ASSERT_FALSE(m.samples.empty());
    json ledger = json::parse(slurp(at("scenes.jsonl.ledger.json")));
    expect_run_header(ledger);
    EXPECT_EQ(ledger["total"], m.samples.size());
    auto st = corpus::stats(m);
    std::size_t generated = 0;
    for (auto& [task, counts] : ledger["per_task"].items()) {
        const std::size_t n = counts["generated"];
        generated += n;
        const std::size_t in_manifest = st.by_task.count(task) ? st.by_task.at(task) : 0;
        EXPECT_EQ(in_manifest, n) << task;
    }
    EXPECT_EQ(generated, m.samples.size());
    EXPECT_EQ(ledger["items"].size(), m.samples.size());
    // The class-agnostic fixture cannot pose label questions.
    bool agnostic_skip = false;
    for (const auto& sk : ledger["skipped"])
        if (sk["id"].get<std::string>().starts_with("boxes_agnostic") &&
            sk["reason"].get<std::string>().find("class-agnostic") != std::string::npos)
            agnostic_skip = true;
    EXPECT_TRUE(agnostic_skip);
}

TEST_F(Cli, GenerateRejectsBeforeWriting) {
    EXPECT_EQ(run_cli({"generate", "--scenes", kData + "/fixtures/scenes", "--media-root", at("missing"), "--out",
                   at("x.jsonl")}),
              cli::kExitValidation);
    EXPECT_FALSE(fs::exists(at("x.jsonl")));

    // Frames that do not resolve make the scene invalid; nothing is written.
    fs::create_directories(dir / "media");
    ::testing::internal::CaptureStderr();
    EXPECT_EQ(run_cli({"generate", "--scenes", kData + "/fixtures/scenes", "--simulators", "rotation2d", "--media-root",
                   at("media"), "--out", at("x.jsonl")}),
              cli::kExitValidation);
    const std::string err = ::testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("kitchen_01.json"), std::string::npos) << err;
    EXPECT_FALSE(fs::exists(at("x.jsonl")));
    EXPECT_FALSE(fs::exists(dir / "media/sim"));

    spit(dir / "bad/broken.json", "{\"scene_id\": \"x\"");
    touch_scene_media(dir / "media");
    EXPECT_EQ(run_cli({"generate", "--scenes", at("bad"), "--media-root", at("media"), "--out", at("x.jsonl")}),
              cli::kExitValidation);
    EXPECT_EQ(run_cli({"generate", "--simulators", "abs_depth", "--media-root", at("media"), "--out", at("x.jsonl")}),
              cli::kExitValidation);
    EXPECT_EQ(run_cli({"generate", "--out", at("x.jsonl")}), cli::kExitValidation);
    EXPECT_FALSE(fs::exists(at("x.jsonl")));
}

// ---------------------------------------------------------------------------
// evaluate

TEST_F(Cli, EvaluateAllCorrectIsHundred) {
    ASSERT_EQ(run_cli({"generate", "--simulators", "all", "--per-task", "10", "--media-root", at("media"), "--out",
                   at("m.jsonl")}),
              0);
    corpus::Manifest m = corpus::load_manifest(at("m.jsonl"));
    std::string responses;
    for (const auto& s : m.samples) responses += json{{"id", s.id}, {"response", "(" + s.answer + ")"}}.dump() + "\n";
    spit(dir / "responses.jsonl", responses);
    ASSERT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--responses", at("responses.jsonl"), "--out", at("ev")}),
              0);
    json report = json::parse(slurp(at("ev/report.json")));
    expect_run_header(report["run"]);
    EXPECT_EQ(report["report"]["overall"]["score"], "100.00") << report["report"].dump();
    EXPECT_TRUE(fs::exists(at("ev/report.txt")));
    auto scores = jsonl(at("ev/scores.jsonl"));
    ASSERT_EQ(scores.size(), m.samples.size() + 1);
    expect_run_header(scores[0]["run"]);
}

TEST_F(Cli, EvaluateRandomBaselineNearChance) {
    ASSERT_EQ(run_cli({"generate", "--simulators", "all", "--per-task", "150", "--seed", "9", "--media-root", at("media"),
                   "--out", at("m.jsonl")}),
              0);
    ASSERT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--random-baseline", "--seed", "1", "--out", at("ev")}), 0);
    corpus::Manifest m = corpus::load_manifest(at("m.jsonl"));
    double expected = 0, var = 0;
    for (const auto& s : m.samples) {
        const double p = 1.0 / static_cast<double>(s.options.size());
        expected += p;
        var += p * (1 - p);
    }
    const double n = static_cast<double>(m.samples.size());
    json report = json::parse(slurp(at("ev/report.json")));
    const double got = std::stod(report["report"]["overall"]["score"].get<std::string>()) / 100.0 * n;
    EXPECT_LE(std::abs(got - expected), 4.0 * std::sqrt(var)) << got << " vs " << expected;

    // Same seed, same bytes.
    ASSERT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--random-baseline", "--seed", "1", "--out", at("ev2")}), 0);
    EXPECT_EQ(slurp(at("ev/responses.jsonl")), slurp(at("ev2/responses.jsonl")));
    EXPECT_EQ(slurp(at("ev/report.json")), slurp(at("ev2/report.json")));
}

TEST_F(Cli, EvaluateJudgeFusesMeans) {
    corpus::Manifest m;
    for (int i = 0; i < 4; ++i) {
        corpus::Sample s;
        s.id = "d" + std::to_string(i);
        s.question = "How far apart are the chair and the table?";
        s.format = qagen::Format::OpenEnded;
        s.open_subtype = "distance";
        s.answer = "2 meters";
        s.media = {"x.png"};
        s.task = "abs_distance";
        s.category = "Object Distance";
        m.samples.push_back(s);
    }
    corpus::write_manifest(at("m.jsonl"), m);
    const char* preds[] = {"2 m", "2.2 m", "150 cm", "nothing"};
    std::string responses;
    for (int i = 0; i < 4; ++i) responses += json{{"id", "d" + std::to_string(i)}, {"response", preds[i]}}.dump() + "\n";
    spit(dir / "r.jsonl", responses);
    spit(dir / "judge.json", R"({"*": ["The prediction is close.\noutput: 0.6"], "d3": ["output: 0.0"]})");
    ASSERT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--responses", at("r.jsonl"), "--judge", "--judge-scripted",
                   at("judge.json"), "--out", at("ev")}),
              0);
    auto scores = jsonl(at("ev/scores.jsonl"));
    ASSERT_EQ(scores.size(), 5u);
    double sum = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        auto r = eval::ScoreRecord::from_json(scores[i]);
        ASSERT_TRUE(r.judge_score) << scores[i].dump();
        EXPECT_DOUBLE_EQ(*r.judge_score, r.id == "d3" ? 0.0 : 0.6);
        EXPECT_DOUBLE_EQ(r.final_score, (r.parse_score + *r.judge_score) / 2);
        sum += r.final_score;
    }
    json report = json::parse(slurp(at("ev/report.json")));
    EXPECT_EQ(report["report"]["overall"]["score"], eval::percent(sum / 4));
}

TEST_F(Cli, EvaluateIdMismatchListsIds) {
    corpus::Manifest m;
    m.samples = {dog_cat("a"), dog_cat("b")};
    corpus::write_manifest(at("m.jsonl"), m);
    spit(dir / "r.jsonl", "{\"id\": \"a\", \"response\": \"(A)\"}\n{\"id\": \"zzz\", \"response\": \"(A)\"}\n");
    ::testing::internal::CaptureStderr();
    EXPECT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--responses", at("r.jsonl"), "--out", at("ev")}),
              cli::kExitValidation);
    EXPECT_NE(::testing::internal::GetCapturedStderr().find("zzz"), std::string::npos);

    spit(dir / "r.jsonl", "{\"id\": \"a\", \"response\": \"(A)\"}\n");
    ::testing::internal::CaptureStderr();
    EXPECT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--responses", at("r.jsonl"), "--out", at("ev")}),
              cli::kExitValidation);
    EXPECT_NE(::testing::internal::GetCapturedStderr().find("b"), std::string::npos);
    EXPECT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--responses", at("r.jsonl"), "--allow-missing", "--out",
                   at("ev")}),
              0);
    json report = json::parse(slurp(at("ev/report.json")));
    EXPECT_EQ(report["report"]["overall"]["score"], "50.00");
}

// ---------------------------------------------------------------------------
// agent

class CliAgent : public Cli {
protected:
    void SetUp() override {
        Cli::SetUp();
        corpus::Manifest m;
        for (int i = 0; i < 10; ++i) m.samples.push_back(dog_cat("s" + std::to_string(i)));
        corpus::write_manifest(at("m.jsonl"), m);
        json script = json::object();
        for (int i = 0; i < 4; ++i) script["s" + std::to_string(i)] = {kPlan, kCot, kSummary};
        for (int i = 4; i < 7; ++i) script["s" + std::to_string(i)] = {"no plan", "no plan", "no plan", "(B)"};
        for (int i = 7; i < 10; ++i) script["s" + std::to_string(i)] = json::array();
        spit(dir / "script.json", script.dump());
    }
    std::vector<std::string> args(const std::string& out, int parallelism) {
        return {"agent", "--manifest", at("m.jsonl"), "--scripted", at("script.json"), "--mock-tools", kMocks,
                "--media-root", at("media"), "--parallelism", std::to_string(parallelism), "--out", at(out)};
    }
};

TEST_F(CliAgent, StatusesAsScripted) {
    ASSERT_EQ(run_cli(args("run", 1)), 0);
    auto answers = jsonl(at("run/answers.jsonl"));
    ASSERT_EQ(answers.size(), 11u);
    expect_run_header(answers[0]["run"]);
    for (int i = 0; i < 10; ++i) {
        const json& a = answers[static_cast<std::size_t>(i) + 1];
        EXPECT_EQ(a["id"], "s" + std::to_string(i));
        const char* want = i < 4 ? "ok" : i < 7 ? "fallback-direct" : "downgraded-core";
        EXPECT_EQ(a["status"], want) << a.dump();
        EXPECT_EQ(a["response"], i < 4 ? "(A)" : i < 7 ? "(B)" : "");
        json trace = json::parse(slurp(dir / "run/traces" / ("s" + std::to_string(i) + ".json")));
        expect_run_header(trace["run"]);
        EXPECT_EQ(trace["trace"]["status"], want);
    }
    json summary = json::parse(slurp(at("run/summary.json")));
    EXPECT_EQ(summary["statuses"]["ok"], 4);

    // Answers are evaluate-compatible.
    ASSERT_EQ(run_cli({"evaluate", "--manifest", at("m.jsonl"), "--responses", at("run/answers.jsonl"), "--out", at("ev")}),
              0);
    EXPECT_EQ(json::parse(slurp(at("ev/report.json")))["report"]["overall"]["score"], "40.00");

    ::testing::internal::CaptureStdout();
    ASSERT_EQ(run_cli({"report", "--traces", at("run/traces"), "--json", at("report.json")}), 0);
    const std::string table = ::testing::internal::GetCapturedStdout();
    EXPECT_NE(table.find("status fallback-direct"), std::string::npos) << table;
    json rep = json::parse(slurp(at("report.json")));
    EXPECT_EQ(rep["traces"], 10);
    EXPECT_EQ(rep["statuses"]["downgraded-core"], 3);
    EXPECT_EQ(rep["tool_calls"]["LocalizeObjects"], 4);
}

TEST_F(CliAgent, ParallelismDoesNotChangeOutputs) {
    ASSERT_EQ(run_cli(args("p1", 1)), 0);
    ASSERT_EQ(run_cli(args("p4", 4)), 0);
    EXPECT_EQ(slurp(at("p1/answers.jsonl")), slurp(at("p4/answers.jsonl")));
    for (int i = 0; i < 10; ++i) {
        const std::string f = "s" + std::to_string(i) + ".json";
        EXPECT_EQ(slurp(dir / "p1/traces" / f), slurp(dir / "p4/traces" / f)) << f;
    }
}

TEST_F(CliAgent, ReactTurnLimitHonored) {
    json script = {{"*", std::vector<std::string>(30, kFlowTurn)}};
    spit(dir / "react.json", script.dump());
    ASSERT_EQ(run_cli({"agent", "--manifest", at("m.jsonl"), "--paradigm", "react", "--scripted", at("react.json"),
                   "--mock-tools", kMocks, "--parallelism", "3", "--out", at("react")}),
              0);
    for (int i = 0; i < 10; ++i) {
        json t = json::parse(slurp(dir / "react/traces" / ("s" + std::to_string(i) + ".json")))["trace"];
        EXPECT_EQ(t["turns"], 10);
        EXPECT_TRUE(t["summarized"].get<bool>());
    }
}

TEST_F(CliAgent, UnreachableCoreFailsAtStartup) {
    ::testing::internal::CaptureStderr();
    EXPECT_EQ(run_cli({"agent", "--manifest", at("m.jsonl"), "--core-endpoint", "http://127.0.0.1:9/v1", "--mock-tools",
                   kMocks, "--out", at("x")}),
              cli::kExitRuntime);
    EXPECT_NE(::testing::internal::GetCapturedStderr().find("unreachable"), std::string::npos);
    EXPECT_FALSE(fs::exists(at("x")));
    EXPECT_EQ(run_cli({"agent", "--manifest", at("m.jsonl"), "--out", at("x")}), cli::kExitValidation);
    EXPECT_EQ(run_cli({"agent", "--manifest", at("m.jsonl"), "--scripted", at("script.json"), "--tool-endpoint",
                   "Teleport=http://127.0.0.1:9", "--out", at("x")}),
              cli::kExitValidation);
    EXPECT_EQ(run_cli({"agent", "--manifest", at("m.jsonl"), "--scripted", at("script.json"), "--paradigm", "tree",
                   "--out", at("x")}),
              cli::kExitValidation);
}

// ---------------------------------------------------------------------------
// serve-mock-tools

TEST_F(Cli, ServeMockToolsLoopback) {
    int rc = -1;
    std::thread server([&] {
        rc = run_cli({"serve-mock-tools", "--fixtures", kMocks, "--port", "0", "--port-file", at("port"), "--duration", "4"});
    });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(3);
    while (slurp(at("port")).empty() && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    const std::string port = trim(slurp(at("port")));
    ASSERT_FALSE(port.empty());

    const auto& reg = tools::register_catalog();
    tools::RemoteBackend remote({"http://127.0.0.1:" + port});
    tools::MockBackend local = tools::MockBackend::from_file(reg, kMocks);
    EXPECT_EQ(remote.health()["tools"], json(local.tool_names()));

    spit(dir / "img.png", "not really a png");
    const std::vector<std::string> media = {at("img.png")};
    tools::Toolbox over_wire(reg), in_process(reg);
    over_wire.set_default(&remote);
    in_process.set_default(&local);
    const json calls[] = {
        {{"name", "LocalizeObjects"}, {"arguments", {{"image", "image-0"}, {"objects", {"dog", "cat"}}}}},
        {{"name", "EstimateObjectDepth"},
         {"arguments", {{"image", "image-0"}, {"objects", {"dog", "cat"}}, {"indoor_or_outdoor", "outdoor"}}}},
        {{"name", "CountObjects"}, {"arguments", {{"image", "image-0"}, {"objects", {"chair"}}}}}};
    for (const auto& c : calls) {
        auto a = over_wire.invoke(c["name"], c["arguments"], media);
        auto b = in_process.invoke(c["name"], c["arguments"], media);
        EXPECT_EQ(a.to_json(), b.to_json()) << c.dump();
    }
    auto miss = over_wire.invoke("LocalizeObjects", {{"image", "image-0"}, {"objects", {"horse"}}}, media);
    EXPECT_FALSE(miss.ok);
    EXPECT_NE(miss.error.find("no fixture"), std::string::npos) << miss.error;

    server.join();
    EXPECT_EQ(rc, 0);
}

TEST_F(Cli, ServeMockToolsPortInUse) {
    const auto& reg = tools::register_catalog();
    tools::MockBackend mock = tools::MockBackend::from_file(reg, kMocks);
    tools::ToolServer busy(reg, mock, mock.tool_names());
    const int port = busy.start();
    ::testing::internal::CaptureStderr();
    EXPECT_EQ(run_cli({"serve-mock-tools", "--fixtures", kMocks, "--port", std::to_string(port), "--duration", "0.2"}),
              cli::kExitRuntime);
    ::testing::internal::GetCapturedStderr();
    busy.stop();
    EXPECT_EQ(run_cli({"serve-mock-tools"}), cli::kExitValidation);
}

// ---------------------------------------------------------------------------
// configuration and exit codes

TEST_F(Cli, ConfigLayering) {
    spit(dir / "c.toml", "[generate]\nseed = 11\nper-task = 2\nmedia-root = \"" + at("file") + "\"\n");
    const std::vector<std::string> base = {"--config", at("c.toml"), "generate", "--simulators", "rotation2d"};
    auto header = [&](const std::string& out) { return corpus::load_manifest(out).info; };

    auto a = base;
    a.insert(a.end(), {"--out", at("a.jsonl")});
    ASSERT_EQ(run_cli(a), 0);
    EXPECT_TRUE(fs::exists(dir / "file/sim/rotation2d"));
    EXPECT_EQ(header(at("a.jsonl"))["seed"], 11u);
    EXPECT_EQ(header(at("a.jsonl"))["counts"]["total"], 2);

    ::setenv("SPATIALQA_MEDIA_ROOT", at("env").c_str(), 1);
    auto b = base;
    b.insert(b.end(), {"--out", at("b.jsonl")});
    ASSERT_EQ(run_cli(b), 0);
    EXPECT_TRUE(fs::exists(dir / "env/sim/rotation2d"));
    // Where media lives is not part of the run config.
    EXPECT_FALSE(header(at("b.jsonl"))["config"].contains("media-root"));
    EXPECT_EQ(slurp(at("a.jsonl")), slurp(at("b.jsonl")));

    auto c = base;
    c.insert(c.end(), {"--media-root", at("flag"), "--seed", "5", "--out", at("c.jsonl")});
    ASSERT_EQ(run_cli(c), 0);
    ::unsetenv("SPATIALQA_MEDIA_ROOT");
    EXPECT_EQ(header(at("c.jsonl"))["seed"], 5u);
    EXPECT_TRUE(fs::exists(dir / "flag/sim/rotation2d"));
    EXPECT_NE(header(at("a.jsonl"))["config_hash"], header(at("c.jsonl"))["config_hash"]);
}

TEST_F(Cli, StatsEmbedsRunHeader) {
    ASSERT_EQ(run_cli({"generate", "--simulators", "spatial_map", "--per-task", "3", "--media-root", at("media"), "--out",
                   at("m.jsonl")}),
              0);
    ::testing::internal::CaptureStdout();
    ASSERT_EQ(run_cli({"stats", "--manifest", at("m.jsonl"), "--json", at("stats.json")}), 0);
    EXPECT_NE(::testing::internal::GetCapturedStdout().find("Mental Animation"), std::string::npos);
    json st = json::parse(slurp(at("stats.json")));
    expect_run_header(st["run"]);
    EXPECT_EQ(st["stats"]["total"], 3);
}

TEST(CliExit, Codes) {
    EXPECT_EQ(cli::exit_code_for(ValidationError("x")), cli::kExitValidation);
    EXPECT_EQ(cli::exit_code_for(ConfigError("x")), cli::kExitValidation);
    EXPECT_EQ(cli::exit_code_for(LoadError("x")), cli::kExitValidation);
    EXPECT_EQ(cli::exit_code_for(TransportError("x")), cli::kExitRuntime);
    EXPECT_EQ(cli::exit_code_for(std::runtime_error("x")), cli::kExitRuntime);
    ::testing::internal::CaptureStderr();
    ::testing::internal::CaptureStdout();
    EXPECT_EQ(run_cli({"frobnicate"}), cli::kExitValidation);
    EXPECT_EQ(run_cli({}), cli::kExitValidation);
    EXPECT_EQ(run_cli({"--version"}), cli::kExitOk);
    ::testing::internal::GetCapturedStdout();
    ::testing::internal::GetCapturedStderr();
}
