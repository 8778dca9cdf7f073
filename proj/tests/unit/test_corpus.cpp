#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/corpus/manifest.hpp"
#include "spatialqa/qagen/simulators.hpp"

using namespace spatialqa;
using namespace spatialqa::corpus;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(SPATIALQA_TEST_DATA_DIR) + "/fixtures/" + name; }

Sample mcq(const std::string& id) {
    Sample s;
    s.id = id;
    s.question = "Which is closer?";
    s.format = qagen::Format::MultiChoice;
    s.options = {"dog", "cat"};
    s.answer = "B";
    s.media = {"a.png"};
    s.task = "rel_depth";
    s.category = "Depth Estimation";
    s.source = "unit";
    return s;
}

}  // namespace

TEST(Manifest, EmptyFile) {
    const auto m = parse_manifest("");
    EXPECT_TRUE(m.samples.empty());
    const auto r = stats(m);
    EXPECT_EQ(r.total, 0u);
    for (const auto& [k, v] : r.by_format) EXPECT_EQ(v, 0u) << k;
    for (const auto& [k, v] : r.by_category) EXPECT_EQ(v, 0u) << k;
}

TEST(Manifest, RoundTripOneLine) {
    Manifest m;
    m.samples.push_back(mcq("x1"));
    const auto text = manifest_to_string(m);
    const auto back = parse_manifest(text);
    ASSERT_EQ(back.samples.size(), 1u);
    EXPECT_EQ(back.samples[0].format, qagen::Format::MultiChoice);
    EXPECT_EQ(back.samples[0].options, m.samples[0].options);
    EXPECT_EQ(manifest_to_string(back), text);
}

TEST(Manifest, FileRoundTripIsByteIdentical) {
    const auto m = load_manifest(fixture("manifests/published_counts.jsonl"));
    const auto tmp = std::filesystem::temp_directory_path() / "spatialqa_manifest_rt.jsonl";
    write_manifest(tmp, m);
    std::ifstream a(fixture("manifests/published_counts.jsonl"), std::ios::binary), b(tmp, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb);
}

TEST(Manifest, MissingAnswerNamesFieldAndLine) {
    json good = to_json(mcq("a"));
    json broken = to_json(mcq("b"));
    broken.erase("answer");
    const std::string text = good.dump() + "\n" + broken.dump() + "\n";
    try {
        parse_manifest(text);
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'answer'"), std::string::npos) << msg;
    }
}

TEST(Manifest, ReportsEveryBadLine) {
    json a = to_json(mcq("a"));
    a["answer"] = "E";
    json b = to_json(mcq("b"));
    b["category"] = "Astrology";
    try {
        parse_manifest("{not json}\n" + a.dump() + "\n" + b.dump() + "\n");
        FAIL();
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 1"), std::string::npos);
        EXPECT_NE(msg.find("line 2: field 'answer'"), std::string::npos) << msg;
        EXPECT_NE(msg.find("line 3: field 'category'"), std::string::npos) << msg;
    }
}

TEST(Manifest, DuplicateIdsRejected) {
    const std::string line = to_json(mcq("same")).dump() + "\n";
    EXPECT_THROW(parse_manifest(line + line), LoadError);
}

TEST(Manifest, HeaderCountsMustMatch) {
    Manifest m;
    m.samples = {mcq("a"), mcq("b")};
    m.info = {{"name", "t"}, {"counts", count_summary(m)}};
    EXPECT_NO_THROW(parse_manifest(manifest_to_string(m)));
    m.samples.pop_back();
    EXPECT_THROW(parse_manifest(manifest_to_string(m)), LoadError);
}

TEST(Manifest, FormatShapes) {
    Sample j = mcq("j");
    j.format = qagen::Format::Judgment;
    j.options.clear();
    j.answer = "Yes";
    EXPECT_THROW(j.validate(), ValidationError);
    j.answer = "yes";
    EXPECT_NO_THROW(j.validate());

    Sample o = mcq("o");
    o.format = qagen::Format::OpenEnded;
    o.options.clear();
    o.open_subtype = "distance";
    o.answer = "2.5 meters";
    EXPECT_NO_THROW(o.validate());
    o.answer = "2.5 parsecs";
    EXPECT_THROW(o.validate(), ValidationError);
    o.open_subtype = "counting";
    o.answer = "4";
    EXPECT_NO_THROW(o.validate());
    o.answer = "four";
    EXPECT_THROW(o.validate(), ValidationError);

    Sample dup = mcq("d");
    dup.options = {"Dog", "dog "};
    EXPECT_THROW(dup.validate(), ValidationError);
}

TEST(Manifest, MediaCheckingUsesRootAndEnv) {
    const auto root = std::filesystem::temp_directory_path() / "spatialqa_media_root";
    std::filesystem::create_directories(root);
    std::ofstream(root / "a.png") << "x";
    const std::string text = to_json(mcq("m")).dump() + "\n";
    LoadOptions opts;
    opts.check_media = true;
    opts.media_root = root;
    ::unsetenv("SPATIALQA_MEDIA_ROOT");
    EXPECT_NO_THROW(parse_manifest(text, opts));
    opts.media_root = root / "nowhere";
    EXPECT_THROW(parse_manifest(text, opts), LoadError);
    ::setenv("SPATIALQA_MEDIA_ROOT", root.c_str(), 1);
    EXPECT_NO_THROW(parse_manifest(text, opts));
    ::unsetenv("SPATIALQA_MEDIA_ROOT");
}

TEST(Frames, Identity) {
    const auto idx = sample_frames(32, 32);
    ASSERT_EQ(idx.size(), 32u);
    for (int i = 0; i < 32; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Frames, ShortVideoKeepsAll) {
    const auto idx = sample_frames(10, 32);
    ASSERT_EQ(idx.size(), 10u);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Frames, LinspaceOracle) {
    // Oracle: round(i * (F - 1) / (n - 1)) in exact rational arithmetic.
    for (int F = 1; F <= 400; ++F) {
        for (int n : {1, 2, 3, 8, 16, 32}) {
            const auto idx = sample_frames(F, n);
            EXPECT_EQ(idx.size(), static_cast<std::size_t>(std::min(F, n)));
            EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
            EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
            if (F > n && n >= 2) {
                EXPECT_EQ(idx.front(), 0);
                EXPECT_EQ(idx.back(), F - 1);
                for (int i = 0; i < n; ++i) {
                    const long num = 2L * i * (F - 1) + (n - 1);  // round half up of i(F-1)/(n-1)
                    EXPECT_EQ(idx[i], num / (2L * (n - 1))) << F << " " << n << " " << i;
                }
            }
        }
    }
    const auto v = sample_frames(64, 32);
    EXPECT_EQ(v.front(), 0);
    EXPECT_EQ(v.back(), 63);
    EXPECT_THROW(sample_frames(0, 32), ValidationError);
}

TEST(Frames, PathOverload) {
    std::vector<std::string> frames;
    for (int i = 0; i < 5; ++i) frames.push_back("f" + std::to_string(i) + ".png");
    EXPECT_EQ(sample_frames(frames, 3), (std::vector<std::string>{"f0.png", "f2.png", "f4.png"}));
}

TEST(Stats, PublishedCounts) {
    const auto m = load_manifest(fixture("manifests/published_counts.jsonl"));
    const auto r = stats(m);
    EXPECT_EQ(r.total, 5025u);
    EXPECT_EQ(r.by_format.at("multi-choice"), 3686u);
    EXPECT_EQ(r.by_format.at("judgment"), 463u);
    EXPECT_EQ(r.by_format.at("open-ended"), 876u);
    EXPECT_EQ(r.by_modality.at("single-image"), 2493u);
    EXPECT_EQ(r.by_modality.at("multi-image"), 1339u);
    EXPECT_EQ(r.by_modality.at("video"), 1193u);
    const std::map<std::string, std::size_t> cats = {
        {"Mental Animation", 447}, {"Counting", 315},      {"Depth Estimation", 520}, {"Object Distance", 576},
        {"Object Motion", 415},    {"View Reasoning", 446}, {"Object Size", 559},      {"Camera", 778},
        {"Temporal Reasoning", 272}, {"Object Localization", 697}};
    EXPECT_EQ(r.by_category, cats);
    EXPECT_EQ(r.by_source.at("SpatialScore-Repurpose"), 1091u);
    EXPECT_EQ(r.by_source.at("VSI-Bench"), 876u);
    std::size_t sum = 0;
    for (const auto& [k, v] : r.by_source) sum += v;
    EXPECT_EQ(sum, r.total);
    EXPECT_NE(r.to_table().find("Total 5025"), std::string::npos);
}

TEST(Stats, GeneratedBenchmarkMatchesEmissionLog) {
    Manifest m;
    std::map<std::string, std::size_t> emitted;
    for (int i = 0; i < 200; ++i) {
        Rng rng(mix_seed(99, static_cast<std::uint64_t>(i)));
        const auto task = qagen::kSimulatorTasks[i % 4];
        const auto item = qagen::simulate(task, rng);
        ++emitted[std::string(qagen::to_string(task))];
        m.samples.push_back(sample_from_qa(item.qa, "sim-" + std::to_string(i)));
    }
    const auto back = parse_manifest(manifest_to_string(m));
    const auto r = stats(back);
    EXPECT_EQ(r.total, 200u);
    EXPECT_EQ(r.by_task, emitted);
    EXPECT_EQ(r.by_category.at("Mental Animation"), 200u);
    EXPECT_EQ(r.by_format.at("multi-choice"), 200u);
}
