#include "spatialqa/corpus/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/geometry/units.hpp"

namespace spatialqa::corpus {

using nlohmann::json;

bool is_category(std::string_view name) {
    return std::find(kCategories.begin(), kCategories.end(), name) != kCategories.end();
}

std::string_view to_string(MediaKind k) {
    switch (k) {
        case MediaKind::Image: return "image";
        case MediaKind::Frames: return "frames";
        case MediaKind::Video: return "video";
    }
    return "?";
}

MediaKind media_kind_from(std::string_view s) {
    if (s == "image") return MediaKind::Image;
    if (s == "frames") return MediaKind::Frames;
    if (s == "video") return MediaKind::Video;
    throw ValidationError("unknown media kind: " + std::string(s));
}

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::SingleImage: return "single-image";
        case Modality::MultiImage: return "multi-image";
        case Modality::Video: return "video";
    }
    return "?";
}

Modality Sample::modality() const {
    if (media_kind != MediaKind::Image) return Modality::Video;
    return media.size() > 1 ? Modality::MultiImage : Modality::SingleImage;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw ValidationError("field '" + field + "': " + why);
}

bool parses_number(std::string_view s, double* out = nullptr) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) return false;
    if (out) *out = v;
    return true;
}

}  // namespace

void Sample::validate() const {
    if (trim(id).empty()) bad("id", "empty");
    if (trim(question).empty()) bad("question", "empty");
    if (trim(task).empty()) bad("task", "empty");
    if (!is_category(category)) bad("category", "unknown category '" + category + "'");
    if (media.empty()) bad("media", "no media references");
    if (media_kind == MediaKind::Video && media.size() != 1) bad("media", "video samples reference exactly one file");

    switch (format) {
        case qagen::Format::MultiChoice: {
            if (options.size() < 2) bad("options", "multi-choice needs at least two options");
            if (options.size() > 26) bad("options", "more than 26 options");
            qagen::OptionSet set{options, 0};
            try {
                set.validate();
            } catch (const ValidationError& e) {
                bad("options", e.what());
            }
            if (answer.size() != 1 || answer[0] < 'A' || answer[0] >= 'A' + static_cast<int>(options.size())) {
                bad("answer", "multi-choice answer must be an option letter, got '" + answer + "'");
            }
            if (!open_subtype.empty()) bad("open_subtype", "only open-ended samples carry a subtype");
            break;
        }
        case qagen::Format::Judgment:
            if (answer != "yes" && answer != "no") bad("answer", "judgment answer must be yes or no");
            if (!options.empty()) bad("options", "judgment samples carry no options");
            break;
        case qagen::Format::OpenEnded: {
            if (!options.empty()) bad("options", "open-ended samples carry no options");
            if (trim(answer).empty()) bad("answer", "empty");
            if (open_subtype == "counting") {
                if (!parses_number(answer)) bad("answer", "counting answer must be a number");
            } else if (open_subtype == "distance") {
                const auto parts = split(normalize_space(answer), ' ');
                if (parts.size() != 2 || !parses_number(parts[0]) || !geometry::parse_length_unit(parts[1])) {
                    bad("answer", "distance answer must be '<number> <unit>', got '" + answer + "'");
                }
            } else if (open_subtype != "other") {
                bad("open_subtype", "must be counting, distance or other");
            }
            break;
        }
    }
}

Sample sample_from_qa(const qagen::QAPair& qa, std::string id) {
    Sample s;
    s.id = std::move(id);
    s.question = qa.question;
    s.format = qa.format;
    if (qa.format == qagen::Format::MultiChoice) s.options = qa.options.options;
    s.answer = qa.answer;
    if (qa.format == qagen::Format::OpenEnded) s.open_subtype = qa.open_subtype;
    s.media_kind = media_kind_from(qa.media_kind.empty() ? "image" : qa.media_kind);
    s.media = qa.media;
    s.task = std::string(qagen::to_string(qa.task));
    s.category = qa.category;
    s.source = qa.source;
    s.meta = {{"template_id", qa.template_id}, {"seed", qa.seed}};
    return s;
}

json to_json(const Sample& s) {
    json j;
    j["id"] = s.id;
    j["question"] = s.question;
    j["format"] = std::string(qagen::to_string(s.format));
    if (s.format == qagen::Format::MultiChoice) j["options"] = s.options;
    j["answer"] = s.answer;
    if (s.format == qagen::Format::OpenEnded) j["open_subtype"] = s.open_subtype;
    j["media"] = {{"kind", std::string(to_string(s.media_kind))}, {"paths", s.media}};
    j["task"] = s.task;
    j["category"] = s.category;
    j["source"] = s.source;
    if (!s.meta.empty()) j["meta"] = s.meta;
    return j;
}

namespace {

std::string string_field(const json& j, const char* key, bool required = true) {
    if (!j.contains(key)) {
        if (required) bad(key, "missing");
        return {};
    }
    if (!j[key].is_string()) bad(key, "must be a string");
    return j[key].get<std::string>();
}

}  // namespace

Sample sample_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("record must be a JSON object");
    Sample s;
    s.id = string_field(j, "id");
    s.question = string_field(j, "question");
    s.format = qagen::format_from(string_field(j, "format"));
    s.answer = string_field(j, "answer");
    s.open_subtype = string_field(j, "open_subtype", false);
    if (j.contains("options")) {
        if (!j["options"].is_array()) bad("options", "must be an array");
        for (const auto& o : j["options"]) {
            if (!o.is_string()) bad("options", "entries must be strings");
            s.options.push_back(o.get<std::string>());
        }
    }
    if (!j.contains("media") || !j["media"].is_object()) bad("media", "missing or not an object");
    const auto& m = j["media"];
    s.media_kind = media_kind_from(string_field(m, "kind"));
    if (!m.contains("paths") || !m["paths"].is_array()) bad("media.paths", "missing or not an array");
    for (const auto& p : m["paths"]) {
        if (!p.is_string()) bad("media.paths", "entries must be strings");
        s.media.push_back(p.get<std::string>());
    }
    s.task = string_field(j, "task");
    s.category = string_field(j, "category");
    s.source = string_field(j, "source", false);
    if (j.contains("meta")) {
        if (!j["meta"].is_object()) bad("meta", "must be an object");
        s.meta = j["meta"];
    }
    s.validate();
    return s;
}

json count_summary(const Manifest& m) {
    json formats = json::object();
    for (const auto f : {qagen::Format::MultiChoice, qagen::Format::Judgment, qagen::Format::OpenEnded}) {
        formats[std::string(qagen::to_string(f))] = 0;
    }
    for (const auto& s : m.samples) formats[std::string(qagen::to_string(s.format))] = formats[std::string(qagen::to_string(s.format))].get<int>() + 1;
    return {{"total", m.samples.size()}, {"format", formats}};
}

void Manifest::validate() const {
    std::set<std::string_view> ids;
    for (const auto& s : samples) {
        if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id: " + s.id);
    }
    if (info.contains("counts") && info["counts"] != count_summary(*this)) {
        throw ValidationError("header counts disagree with the manifest body");
    }
}

const Sample* Manifest::find(std::string_view id) const {
    for (const auto& s : samples) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

std::filesystem::path media_root(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("SPATIALQA_MEDIA_ROOT"); env && *env) return env;
    return fallback;
}

std::filesystem::path resolve_media(const std::string& ref, const std::filesystem::path& root) {
    const std::filesystem::path p(ref);
    if (p.is_absolute() || root.empty()) return p;
    return root / p;
}

Manifest parse_manifest(std::string_view text, const LoadOptions& opts) {
    Manifest m;
    std::vector<std::string> errors;
    std::set<std::string> ids;
    const auto root = media_root(opts.media_root);
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            errors.push_back(where + "not valid JSON (" + e.what() + ")");
            continue;
        }
        if (j.is_object() && j.size() == 1 && j.contains("manifest")) {
            if (lineno != 1 && !m.samples.empty()) {
                errors.push_back(where + "manifest header must be the first record");
            } else if (!j["manifest"].is_object()) {
                errors.push_back(where + "manifest header must be an object");
            } else {
                m.info = j["manifest"];
            }
            continue;
        }
        try {
            Sample s = sample_from_json(j);
            if (!ids.insert(s.id).second) throw ValidationError("field 'id': duplicate id '" + s.id + "'");
            if (opts.check_media) {
                for (const auto& ref : s.media) {
                    if (!std::filesystem::exists(resolve_media(ref, root))) {
                        throw ValidationError("field 'media.paths': unresolvable reference '" + ref + "'");
                    }
                }
            }
            m.samples.push_back(std::move(s));
        } catch (const ValidationError& e) {
            errors.push_back(where + e.what());
        }
    }
    if (errors.empty()) {
        try {
            m.validate();
        } catch (const ValidationError& e) {
            errors.push_back(e.what());
        }
    }
    if (!errors.empty()) throw LoadError("manifest has " + std::to_string(errors.size()) + " bad record(s):\n" + join(errors, "\n"));
    return m;
}

Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open manifest: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_manifest(buf.str(), opts);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

std::string manifest_to_string(const Manifest& m) {
    std::string out;
    if (!m.info.empty()) out += json{{"manifest", m.info}}.dump() + "\n";
    for (const auto& s : m.samples) out += to_json(s).dump() + "\n";
    return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write manifest: " + path.string());
    out << manifest_to_string(m);
}

std::vector<int> sample_frames(int frame_count, int n) {
    if (frame_count <= 0) throw ValidationError("video has no frames");
    if (n < 1) throw ValidationError("frame budget must be >= 1");
    std::vector<int> out;
    if (frame_count <= n) {
        for (int i = 0; i < frame_count; ++i) out.push_back(i);
        return out;
    }
    if (n == 1) return {0};
    const double step = static_cast<double>(frame_count - 1) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const int idx = static_cast<int>(std::lround(i * step));
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

std::vector<std::string> sample_frames(const std::vector<std::string>& frames, int n) {
    std::vector<std::string> out;
    for (int i : sample_frames(static_cast<int>(frames.size()), n)) out.push_back(frames[static_cast<std::size_t>(i)]);
    return out;
}

StatsReport stats(const Manifest& m) {
    StatsReport r;
    r.total = m.samples.size();
    for (const auto f : {qagen::Format::MultiChoice, qagen::Format::Judgment, qagen::Format::OpenEnded}) {
        r.by_format[std::string(qagen::to_string(f))] = 0;
    }
    for (const auto mo : {Modality::SingleImage, Modality::MultiImage, Modality::Video}) {
        r.by_modality[std::string(to_string(mo))] = 0;
    }
    for (const auto c : kCategories) r.by_category[std::string(c)] = 0;
    for (const auto& s : m.samples) {
        ++r.by_format[std::string(qagen::to_string(s.format))];
        ++r.by_modality[std::string(to_string(s.modality()))];
        ++r.by_task[s.task];
        ++r.by_category[s.category];
        ++r.by_source[s.source.empty() ? "(none)" : s.source];
    }
    return r;
}

json StatsReport::to_json() const {
    return {{"total", total},       {"format", by_format}, {"modality", by_modality},
            {"task", by_task},      {"category", by_category}, {"source", by_source}};
}

std::string StatsReport::to_table() const {
    std::ostringstream os;
    auto section = [&](const char* title, const std::map<std::string, std::size_t>& counts) {
        os << title << "\n";
        for (const auto& [k, v] : counts) {
            std::string key = "  " + k;
            if (key.size() < 34) key.resize(34, ' ');
            os << key << " " << v << "\n";
        }
    };
    section("Question type", by_format);
    section("Input modality", by_modality);
    section("Category", by_category);
    section("Task", by_task);
    section("Source", by_source);
    os << "Total " << total << "\n";
    return os.str();
}

}  // namespace spatialqa::corpus
