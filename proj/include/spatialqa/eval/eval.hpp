#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spatialqa/common/rng.hpp"
#include "spatialqa/corpus/manifest.hpp"
#include "spatialqa/llm/client.hpp"

namespace spatialqa::eval {

namespace prompts {
extern const std::string_view kJudgment;
extern const std::string_view kMultiChoice;
extern const std::string_view kMetricOpen;
extern const std::string_view kOtherOpen;
extern const std::string_view kJudge;
}  // namespace prompts

/// Evaluation prompt for a sample; multi-choice options are listed after the question.
std::string build_prompt(const corpus::Sample& s);
/// One user turn with the prompt and, unless blind, the sample's media resolved
/// against `media_root` (frames sampled down to `max_frames`).
llm::ChatTurn build_turn(const corpus::Sample& s, const std::filesystem::path& media_root, bool blind,
                         int max_frames = 32);

enum class AnswerKind { ChoiceLetter, YesNo, ScalarWithUnit, Scalar, Matrix, RawText };
std::string_view to_string(AnswerKind k);

struct ParsedAnswer {
    AnswerKind kind = AnswerKind::RawText;
    char letter = 0;             // ChoiceLetter
    bool yes = false;            // YesNo
    double value = 0.0;          // Scalar / ScalarWithUnit
    std::string unit;            // ScalarWithUnit: canonical symbol (m, cm, mm, in, ft)
    std::vector<double> numbers; // Matrix
    std::string text;            // the span parsing ran on
};

/// Never throws. Precedence: <answer> span, then the format-specific pattern,
/// then raw text.
ParsedAnswer parse_answer(std::string_view text, qagen::Format format, std::string_view subtype = {});

/// First number (range "a-b" collapses to b) and the unit word right after it.
struct Quantity {
    double value = 0.0;
    std::optional<std::string> unit;  // canonical symbol
};
std::optional<Quantity> parse_quantity(std::string_view text);

struct MRAConfig {
    double start = 0.50;
    double end = 0.95;
    double interval = 0.05;

    /// start, start + interval, ... up to end (inclusive within 1e-9).
    std::vector<double> thresholds() const;
    /// Throws ConfigError unless 0 < start < end < 1 and interval > 0.
    void validate() const;
};

/// Mean over thresholds C of [norm <= 1 - C] with norm = |pred - gt| / gt
/// (+inf when gt == 0).
double mra_from_values(double pred, double gt, const MRAConfig& cfg = {});

/// Counting: plain scalars. Distance: both converted to cm; a missing unit is
/// borrowed from the other side, and two unitless numbers compare as scalars.
/// Throws UnitError on an unknown unit string.
double mra(double pred, std::optional<std::string> pred_unit, double gt, std::optional<std::string> gt_unit,
           std::string_view subtype, const MRAConfig& cfg = {});
/// Text form; unparsable prediction scores 0.
double mra(std::string_view pred_text, std::string_view gt_text, std::string_view subtype, const MRAConfig& cfg = {});

struct JudgeConfig {
    MRAConfig mra;
    llm::ChatConfig chat;
};

/// Fills the judge prompt, returns the clamped value of the last "output: <float>"
/// line, or nullopt when the reply has none or the call fails.
std::optional<double> judge_with_llm(std::string_view question, std::string_view gt, std::string_view pred,
                                     std::string_view subtype, const JudgeConfig& cfg, llm::ChatClient& client);
std::optional<double> parse_judge_output(std::string_view reply);

struct ScoreRecord {
    std::string id;
    std::string task;
    std::string category;
    std::string format;
    std::string parsed;  // normalized extracted answer, for audits
    double parse_score = 0.0;
    std::optional<double> judge_score;
    double final_score = 0.0;
    bool judge_gap = false;  // |parse - judge| > 0.5

    nlohmann::json to_json() const;
    static ScoreRecord from_json(const nlohmann::json& j);
};

/// Optional judge hook: (sample, response) -> score or nullopt.
using Judge = std::function<std::optional<double>(const corpus::Sample&, std::string_view)>;

ScoreRecord score_sample(const corpus::Sample& s, std::string_view response, const Judge& judge = {},
                         const MRAConfig& cfg = {});

struct GroupScore {
    std::size_t count = 0;
    double mean = 0.0;  // in [0, 1]
};

struct Report {
    GroupScore overall;
    std::map<std::string, GroupScore> per_category;
    std::map<std::string, GroupScore> per_task;
    std::map<std::string, GroupScore> per_format;
    std::vector<std::string> missing;  // manifest ids without a record (scored 0)
    std::size_t judge_gaps = 0;

    nlohmann::json to_json() const;  // percentages with 2 decimals
    std::string to_table() const;
};

/// Throws ValidationError on duplicate record ids or ids absent from the manifest.
Report aggregate(const std::vector<ScoreRecord>& records, const corpus::Manifest& manifest);

/// Percentage with two decimals, e.g. 0.25 -> "25.00".
std::string percent(double fraction);

/// Chance-level response: uniform option / yes-no, or a value uniform in
/// [0.25, 4] x ground truth with its unit. "other" open answers get an empty reply.
std::string random_baseline(const corpus::Sample& s, Rng& rng);

}  // namespace spatialqa::eval
