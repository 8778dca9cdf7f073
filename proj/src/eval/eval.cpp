#include "spatialqa/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/geometry/units.hpp"
#include "spatialqa/qagen/templates.hpp"

namespace spatialqa::eval {

using nlohmann::json;

namespace prompts {

const std::string_view kJudgment = R"(**Please answer with yes or no based on the image.**
**Respond ONLY with 'yes' or 'no'.**
Question: {question})";

const std::string_view kMultiChoice = R"(**Please select the most appropriate answer from the given options.**
**Respond ONLY with the capital letter and its parentheses.**
Question: {question})";

const std::string_view kMetricOpen =
    R"(Please answer the question by measuring the precise distance in 3D space through 2D images or videos.
Respond ONLY with a numeric answer consisting of a scalar and a distance unit in the format of **scalar {scalar} distance_unit {distance unit}**.
Question: {question})";

const std::string_view kOtherOpen = R"(Please answer the question based on the given image or video.
Respond ONLY with a concise and accurate scalar or a scalar with corresponding unit.**
Question: {question})";

const std::string_view kJudge = R"(You are an evaluator.
Your ONLY job is to compute a score using the following algorithm.
Do NOT answer or solve the question.

TASK TYPE:
- If Type == "counting": treat both GT and PRED as plain scalar numbers (no unit conversion).
- If Type == "distance": parse numeric value + unit; if PRED unit is missing, borrow GT unit; if both are missing and both look like plain numbers, treat as scalar.
- If a numeric RANGE like "10-15" appears, use the MAX value (e.g., 15).

ALGORITHM (VSI-Bench MRA):
1) Compute abs_dist_norm:
   - For scalar/counting: abs_dist_norm = abs(pred - gt) / gt   (if gt == 0, set abs_dist_norm = +Infinity)
   - For distance: convert both to centimeters using:
       meter (m): 100 cm;
       centimeter (cm): 1 cm;
       millimeter (mm): 0.1 cm;
       inch (in): 2.54 cm;
       foot (ft): 30.48 cm.
     Then abs_dist_norm = abs(pred_cm - gt_cm) / gt_cm  (if gt_cm == 0, set +Infinity).

2) For thresholds C = linspace(start, end, steps) with steps = int((end-start)/interval+2):
    accuracy(C) = 1 if abs_dist_norm <= (1 - C) else 0
    mean_relative_accuracy = average of accuracy(C) over all thresholds.

3) The final score is this mean_relative_accuracy, a float in [0,1].

IMPORTANT OUTPUT RULE:
- After you finish the calculation, OUTPUT EXACTLY ONE LINE at the end in the form: output: <float>
For example: output: 0.83

Config:
- start={start}
- end={end}
- interval={interval}

Inputs:
- Type: {open_type}   # "counting" or "distance"
- gt_answer: {gt_answer}
- pred_answer: {pred_answer})";

}  // namespace prompts

// ---------------------------------------------------------------------------
// Prompts

std::string build_prompt(const corpus::Sample& s) {
    std::string question = s.question;
    std::string_view tmpl;
    switch (s.format) {
        case qagen::Format::Judgment: tmpl = prompts::kJudgment; break;
        case qagen::Format::MultiChoice: {
            tmpl = prompts::kMultiChoice;
            question += "\nOptions:";
            for (std::size_t i = 0; i < s.options.size(); ++i) {
                question += "\n(" + std::string(1, qagen::OptionSet::letter(i)) + ") " + s.options[i];
            }
            break;
        }
        case qagen::Format::OpenEnded:
            tmpl = s.open_subtype == "distance" ? prompts::kMetricOpen : prompts::kOtherOpen;
            break;
    }
    const std::pair<std::string_view, std::string> slot[] = {{"question", question}};
    return qagen::fill(tmpl, slot);
}

llm::ChatTurn build_turn(const corpus::Sample& s, const std::filesystem::path& media_root, bool blind,
                         int max_frames) {
    llm::ChatTurn turn{llm::Role::User, build_prompt(s), {}};
    if (blind) return turn;
    std::vector<std::string> refs = s.media;
    if (s.media_kind == corpus::MediaKind::Frames) refs = corpus::sample_frames(refs, max_frames);
    for (const auto& r : refs) turn.media.push_back(corpus::resolve_media(r, media_root).string());
    return turn;
}

// ---------------------------------------------------------------------------
// Parsing

std::string_view to_string(AnswerKind k) {
    switch (k) {
        case AnswerKind::ChoiceLetter: return "choice-letter";
        case AnswerKind::YesNo: return "yes-no";
        case AnswerKind::ScalarWithUnit: return "scalar-with-unit";
        case AnswerKind::Scalar: return "scalar";
        case AnswerKind::Matrix: return "matrix";
        case AnswerKind::RawText: return "raw-text";
    }
    return "?";
}

namespace {

const std::regex& answer_tag() {
    static const std::regex re(R"(<answer>([\s\S]*?)</answer>)", std::regex::icase);
    return re;
}

std::vector<double> all_numbers(std::string_view text) {
    static const std::regex re(R"([-+]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][-+]?\d+)?)");
    std::vector<double> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        out.push_back(std::stod(it->str()));
    }
    return out;
}

std::optional<char> choice_letter(const std::string& text) {
    static const std::regex paren(R"(\(([A-Z])\))");
    std::optional<char> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), paren); it != std::sregex_iterator(); ++it) {
        last = it->str(1)[0];
    }
    if (last) return last;
    static const std::regex leading(R"(^\s*([A-Z])(?:[.):]|\s*$|\s))");
    std::smatch m;
    if (std::regex_search(text, m, leading)) return m.str(1)[0];
    return std::nullopt;
}

std::optional<bool> yes_no(const std::string& text) {
    static const std::regex re(R"(\b(yes|no)\b)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, re)) return to_lower(m.str(1)) == "yes";
    return std::nullopt;
}

}  // namespace

std::optional<Quantity> parse_quantity(std::string_view text) {
    // "scalar 3 distance_unit meters" is the format the metric prompt asks for.
    std::string s(text);
    s = std::regex_replace(s, std::regex(R"(\bscalar\b|\bdistance_unit\b|[{}*])", std::regex::icase), " ");
    static const std::regex re(
        R"((\d+(?:\.\d+)?|\.\d+)(?:\s*(?:-|–|to)\s*(\d+(?:\.\d+)?|\.\d+))?\s*([A-Za-z]+)?)");
    std::smatch m;
    if (!std::regex_search(s, m, re)) return std::nullopt;
    Quantity q;
    const double a = std::stod(m.str(1));
    q.value = m[2].matched ? std::max(a, std::stod(m.str(2))) : a;
    if (m[3].matched) {
        if (auto u = geometry::parse_length_unit(m.str(3))) q.unit = std::string(geometry::unit_symbol(*u));
    }
    return q;
}

ParsedAnswer parse_answer(std::string_view raw, qagen::Format format, std::string_view subtype) {
    ParsedAnswer p;
    try {
        std::string text(raw);
        std::smatch m;
        if (std::regex_search(text, m, answer_tag())) text = m.str(1);
        p.text = trim(text);
        switch (format) {
            case qagen::Format::MultiChoice:
                if (auto c = choice_letter(p.text)) {
                    p.kind = AnswerKind::ChoiceLetter;
                    p.letter = *c;
                }
                break;
            case qagen::Format::Judgment:
                if (auto y = yes_no(p.text)) {
                    p.kind = AnswerKind::YesNo;
                    p.yes = *y;
                }
                break;
            case qagen::Format::OpenEnded:
                if (subtype == "distance" || subtype == "counting") {
                    if (auto q = parse_quantity(p.text)) {
                        p.value = q->value;
                        if (subtype == "distance" && q->unit) {
                            p.kind = AnswerKind::ScalarWithUnit;
                            p.unit = *q->unit;
                        } else {
                            p.kind = AnswerKind::Scalar;
                        }
                    }
                } else if (p.text.find('[') != std::string::npos) {
                    auto nums = all_numbers(p.text);
                    if (nums.size() >= 2) {
                        p.kind = AnswerKind::Matrix;
                        p.numbers = std::move(nums);
                    }
                }
                break;
        }
    } catch (const std::exception&) {
        p.kind = AnswerKind::RawText;  // regex stack exhaustion on pathological input
    }
    return p;
}

// ---------------------------------------------------------------------------
// MRA

std::vector<double> MRAConfig::thresholds() const {
    validate();
    std::vector<double> out;
    // Index-based so accumulated rounding never drops or adds the end point.
    const int steps = static_cast<int>(std::floor((end - start) / interval + 1e-9)) + 1;
    for (int i = 0; i < steps; ++i) out.push_back(start + i * interval);
    return out;
}

void MRAConfig::validate() const {
    if (!(start > 0.0 && start < end && end < 1.0)) throw ConfigError("MRA thresholds need 0 < start < end < 1");
    if (!(interval > 0.0)) throw ConfigError("MRA interval must be positive");
}

double mra_from_values(double pred, double gt, const MRAConfig& cfg) {
    if (!std::isfinite(pred) || !std::isfinite(gt)) return 0.0;
    const double norm = gt == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(pred - gt) / std::abs(gt);
    const auto cs = cfg.thresholds();
    int hits = 0;
    // The slack absorbs binary rounding of thresholds such as 1 - 0.9 (a few
    // ulps) while staying far below any real gap between decimal inputs.
    for (double c : cs) hits += norm <= (1.0 - c) + 1e-12;
    return static_cast<double>(hits) / static_cast<double>(cs.size());
}

double mra(double pred, std::optional<std::string> pred_unit, double gt, std::optional<std::string> gt_unit,
           std::string_view subtype, const MRAConfig& cfg) {
    if (subtype == "counting") return mra_from_values(pred, gt, cfg);
    if (subtype != "distance") throw ValidationError("MRA applies to counting or distance answers");
    if (!pred_unit && !gt_unit) return mra_from_values(pred, gt, cfg);
    if (!pred_unit) pred_unit = gt_unit;
    if (!gt_unit) gt_unit = pred_unit;
    const double p = geometry::convert_length_to_cm(pred, *pred_unit);
    const double g = geometry::convert_length_to_cm(gt, *gt_unit);
    return mra_from_values(p, g, cfg);
}

double mra(std::string_view pred_text, std::string_view gt_text, std::string_view subtype, const MRAConfig& cfg) {
    const auto gt = parse_quantity(gt_text);
    if (!gt) throw ValidationError("ground truth has no number: " + std::string(gt_text));
    const auto pred = parse_answer(pred_text, qagen::Format::OpenEnded, subtype);
    if (pred.kind != AnswerKind::Scalar && pred.kind != AnswerKind::ScalarWithUnit) return 0.0;
    const std::optional<std::string> pu = pred.unit.empty() ? std::nullopt : std::optional<std::string>(pred.unit);
    return mra(pred.value, pu, gt->value, subtype == "distance" ? gt->unit : std::nullopt, subtype, cfg);
}

// ---------------------------------------------------------------------------
// Judge

std::optional<double> parse_judge_output(std::string_view reply) {
    static const std::regex re(R"(output\s*:\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?))", std::regex::icase);
    const std::string s(reply);
    std::optional<double> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        last = std::stod(it->str(1));
    }
    if (!last || !std::isfinite(*last)) return std::nullopt;
    return std::clamp(*last, 0.0, 1.0);
}

std::optional<double> judge_with_llm(std::string_view question, std::string_view gt, std::string_view pred,
                                     std::string_view subtype, const JudgeConfig& cfg, llm::ChatClient& client) {
    (void)question;  // the judge prompt scores answers only
    const std::pair<std::string_view, std::string> slots[] = {
        {"start", format_decimal(cfg.mra.start, 4)},  {"end", format_decimal(cfg.mra.end, 4)},
        {"interval", format_decimal(cfg.mra.interval, 4)}, {"open_type", std::string(subtype)},
        {"gt_answer", std::string(gt)},              {"pred_answer", std::string(pred)}};
    try {
        return parse_judge_output(client.ask(qagen::fill(prompts::kJudge, slots), cfg.chat));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Scoring

json ScoreRecord::to_json() const {
    json j = {{"id", id},       {"task", task},     {"category", category},       {"format", format},
              {"parsed", parsed}, {"parse_score", parse_score}, {"final_score", final_score},
              {"judge_gap", judge_gap}};
    j["judge_score"] = judge_score ? json(*judge_score) : json(nullptr);
    return j;
}

ScoreRecord ScoreRecord::from_json(const json& j) {
    try {
        ScoreRecord r;
        r.id = j.at("id").get<std::string>();
        r.task = j.value("task", "");
        r.category = j.value("category", "");
        r.format = j.value("format", "");
        r.parsed = j.value("parsed", "");
        r.parse_score = j.at("parse_score").get<double>();
        if (j.contains("judge_score") && !j["judge_score"].is_null()) r.judge_score = j["judge_score"].get<double>();
        r.final_score = j.at("final_score").get<double>();
        r.judge_gap = j.value("judge_gap", false);
        return r;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("score record: ") + e.what());
    }
}

namespace {

std::string normalize_answer(std::string_view s) {
    std::string t = to_lower(normalize_space(trim(s)));
    while (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
    return trim(t);
}

int decimals_of_last_number(std::string_view s) {
    static const std::regex re(R"(\d+(?:\.(\d+))?)");
    const std::string str(s);
    int d = 0;
    for (auto it = std::sregex_iterator(str.begin(), str.end(), re); it != std::sregex_iterator(); ++it) {
        d = (*it)[1].matched ? static_cast<int>(it->str(1).size()) : 0;
    }
    return d;
}

double score_other(const corpus::Sample& s, const ParsedAnswer& p) {
    if (normalize_answer(p.text) == normalize_answer(s.answer)) return 1.0;
    // Matrices and point lists match numerically at the ground truth's precision.
    const auto gt = parse_answer(s.answer, qagen::Format::OpenEnded, "other");
    if (gt.kind == AnswerKind::Matrix && p.kind == AnswerKind::Matrix && gt.numbers.size() == p.numbers.size()) {
        const double tol = 0.5 * std::pow(10.0, -decimals_of_last_number(s.answer)) + 1e-12;
        for (std::size_t i = 0; i < gt.numbers.size(); ++i) {
            if (std::abs(gt.numbers[i] - p.numbers[i]) > tol) return 0.0;
        }
        return 1.0;
    }
    return 0.0;
}

std::string describe(const ParsedAnswer& p) {
    switch (p.kind) {
        case AnswerKind::ChoiceLetter: return std::string(1, p.letter);
        case AnswerKind::YesNo: return p.yes ? "yes" : "no";
        case AnswerKind::ScalarWithUnit: return format_decimal(p.value, 6) + " " + p.unit;
        case AnswerKind::Scalar: return format_decimal(p.value, 6);
        default: return p.text;
    }
}

}  // namespace

ScoreRecord score_sample(const corpus::Sample& s, std::string_view response, const Judge& judge,
                         const MRAConfig& cfg) {
    ScoreRecord r;
    r.id = s.id;
    r.task = s.task;
    r.category = s.category;
    r.format = std::string(qagen::to_string(s.format));
    const auto p = parse_answer(response, s.format, s.open_subtype);
    r.parsed = describe(p);
    switch (s.format) {
        case qagen::Format::MultiChoice:
            r.parse_score = p.kind == AnswerKind::ChoiceLetter && std::string(1, p.letter) == s.answer ? 1.0 : 0.0;
            r.final_score = r.parse_score;
            return r;
        case qagen::Format::Judgment:
            r.parse_score = p.kind == AnswerKind::YesNo && (p.yes ? "yes" : "no") == s.answer ? 1.0 : 0.0;
            r.final_score = r.parse_score;
            return r;
        case qagen::Format::OpenEnded: break;
    }
    if (s.open_subtype == "other") {
        r.parse_score = score_other(s, p);
        r.final_score = r.parse_score;
        return r;
    }
    try {
        r.parse_score = mra(response, s.answer, s.open_subtype, cfg);
    } catch (const Error&) {
        r.parse_score = 0.0;
    }
    if (judge) r.judge_score = judge(s, response);
    if (r.judge_score) {
        r.final_score = 0.5 * (r.parse_score + *r.judge_score);
        r.judge_gap = std::abs(r.parse_score - *r.judge_score) > 0.5;
    } else {
        r.final_score = r.parse_score;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Aggregation

std::string percent(double fraction) { return format_fixed(fraction * 100.0, 2); }

Report aggregate(const std::vector<ScoreRecord>& records, const corpus::Manifest& manifest) {
    std::map<std::string, const ScoreRecord*> by_id;
    for (const auto& r : records) {
        if (!by_id.emplace(r.id, &r).second) throw ValidationError("duplicate score record id: " + r.id);
    }
    std::set<std::string> known;
    for (const auto& s : manifest.samples) known.insert(s.id);
    std::vector<std::string> unknown;
    for (const auto& [id, _] : by_id) {
        if (!known.count(id)) unknown.push_back(id);
    }
    if (!unknown.empty()) throw ValidationError("score records not in the manifest: " + join(unknown, ", "));

    Report rep;
    std::map<std::string, double> cat_sum, task_sum, fmt_sum;
    double total = 0.0;
    for (const auto& s : manifest.samples) {
        double v = 0.0;
        if (auto it = by_id.find(s.id); it != by_id.end()) {
            v = it->second->final_score;
            rep.judge_gaps += it->second->judge_gap;
        } else {
            rep.missing.push_back(s.id);
        }
        total += v;
        cat_sum[s.category] += v;
        ++rep.per_category[s.category].count;
        task_sum[s.task] += v;
        ++rep.per_task[s.task].count;
        const std::string f(qagen::to_string(s.format));
        fmt_sum[f] += v;
        ++rep.per_format[f].count;
    }
    rep.overall.count = manifest.samples.size();
    rep.overall.mean = rep.overall.count ? total / static_cast<double>(rep.overall.count) : 0.0;
    for (auto& [k, g] : rep.per_category) g.mean = cat_sum[k] / static_cast<double>(g.count);
    for (auto& [k, g] : rep.per_task) g.mean = task_sum[k] / static_cast<double>(g.count);
    for (auto& [k, g] : rep.per_format) g.mean = fmt_sum[k] / static_cast<double>(g.count);
    return rep;
}

json Report::to_json() const {
    auto group = [](const std::map<std::string, GroupScore>& m) {
        json j = json::object();
        for (const auto& [k, g] : m) j[k] = {{"count", g.count}, {"score", percent(g.mean)}};
        return j;
    };
    return {{"overall", {{"count", overall.count}, {"score", percent(overall.mean)}}},
            {"per_category", group(per_category)},
            {"per_task", group(per_task)},
            {"per_format", group(per_format)},
            {"missing", missing},
            {"judge_gaps", judge_gaps}};
}

std::string Report::to_table() const {
    std::ostringstream os;
    auto row = [&](std::string name, const GroupScore& g) {
        if (name.size() < 28) name.resize(28, ' ');
        std::string count = std::to_string(g.count);
        if (count.size() < 7) count.insert(0, 7 - count.size(), ' ');
        std::string score = percent(g.mean);
        if (score.size() < 8) score.insert(0, 8 - score.size(), ' ');
        os << name << count << score << "\n";
    };
    os << "Group                         count   score\n";
    row("Overall", overall);
    for (const auto& [k, g] : per_category) row("  " + k, g);
    for (const auto& [k, g] : per_format) row("  [" + k + "]", g);
    for (const auto& [k, g] : per_task) row("  task:" + k, g);
    if (!missing.empty()) os << "missing responses (scored 0): " << missing.size() << "\n";
    if (judge_gaps) os << "judge/parse gaps > 0.5: " << judge_gaps << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Baselines

std::string random_baseline(const corpus::Sample& s, Rng& rng) {
    switch (s.format) {
        case qagen::Format::MultiChoice:
            return "(" + std::string(1, qagen::OptionSet::letter(rng.index(s.options.size()))) + ")";
        case qagen::Format::Judgment: return rng.bernoulli(0.5) ? "yes" : "no";
        case qagen::Format::OpenEnded: break;
    }
    if (s.open_subtype == "other") return "";
    const auto gt = parse_quantity(s.answer);
    if (!gt) return "";
    const double v = gt->value * rng.uniform(0.25, 4.0);
    std::string out = format_decimal(v, 4);
    if (s.open_subtype == "distance" && gt->unit) out += " " + *gt->unit;
    return out;
}

}  // namespace spatialqa::eval
