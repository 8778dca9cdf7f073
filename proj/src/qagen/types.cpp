#include "spatialqa/qagen/types.hpp"

#include <set>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/geometry/units.hpp"

namespace spatialqa::qagen {

std::string_view to_string(Format f) {
    switch (f) {
        case Format::Judgment: return "judgment";
        case Format::MultiChoice: return "multi-choice";
        case Format::OpenEnded: return "open-ended";
    }
    return "?";
}

Format format_from(std::string_view s) {
    const std::string k = to_lower(trim(s));
    if (k == "judgment" || k == "judgement" || k == "yes/no") return Format::Judgment;
    if (k == "multi-choice" || k == "multiple-choice" || k == "mcq" || k == "multi_choice") {
        return Format::MultiChoice;
    }
    if (k == "open-ended" || k == "open_ended" || k == "open") return Format::OpenEnded;
    throw ValidationError("unknown question format: " + std::string(s));
}

namespace {

struct TaskInfo {
    Task task;
    std::string_view id;
    std::string_view category;
    bool label_dependent;
};

constexpr TaskInfo kTaskTable[] = {
    {Task::Existence, "existence", "Object Localization", true},
    {Task::Detect3D, "detect3d", "Object Localization", true},
    {Task::AbsDepth, "abs_depth", "Depth Estimation", true},
    {Task::AbsDistance, "abs_distance", "Object Distance", true},
    {Task::AbsSize, "abs_size", "Object Size", true},
    {Task::RelDepth, "rel_depth", "Depth Estimation", true},
    {Task::RelDistance, "rel_distance", "Object Distance", true},
    {Task::RelSize, "rel_size", "Object Size", true},
    {Task::Intrinsics, "intrinsics", "Camera", false},
    {Task::Extrinsics, "extrinsics", "Camera", false},
    {Task::CameraMotion, "camera_motion", "Camera", false},
    {Task::PointTracking, "point_tracking", "Object Motion", false},
    {Task::Homography, "homography", "Camera", false},
    {Task::SpatialMap, "spatial_map", "Mental Animation", false},
    {Task::MultiView, "multiview", "Mental Animation", false},
    {Task::Rotation2D, "rotation2d", "Mental Animation", false},
    {Task::Rotation3D, "rotation3d", "Mental Animation", false},
};

const TaskInfo& info(Task t) {
    for (const auto& i : kTaskTable) {
        if (i.task == t) return i;
    }
    throw ValidationError("unknown task");
}

}  // namespace

std::string_view to_string(Task t) { return info(t).id; }

Task task_from(std::string_view s) {
    const std::string k = to_lower(trim(s));
    for (const auto& i : kTaskTable) {
        if (i.id == k) return i.task;
    }
    throw ValidationError("unknown task: " + std::string(s));
}

std::string_view category_of(Task t) { return info(t).category; }
bool label_dependent(Task t) { return info(t).label_dependent; }

void OptionSet::validate() const {
    if (options.empty()) throw ValidationError("option set is empty");
    if (options.size() > 26) throw ValidationError("too many options");
    if (correct < 0 || correct >= static_cast<int>(options.size())) {
        throw ValidationError("correct option index out of range");
    }
    std::set<std::string> seen;
    for (const auto& o : options) {
        if (!seen.insert(normalize_space(o)).second) {
            throw ValidationError("duplicate option: " + o);
        }
    }
}

void QAPair::validate() const {
    if (question.empty()) throw ValidationError("question is empty");
    switch (format) {
        case Format::MultiChoice:
            options.validate();
            if (answer != std::string(1, options.correct_letter())) {
                throw ValidationError("multi-choice answer must be the correct letter");
            }
            break;
        case Format::Judgment:
            if (answer != "yes" && answer != "no") throw ValidationError("judgment answer must be yes or no");
            break;
        case Format::OpenEnded:
            if (answer.empty()) throw ValidationError("open-ended answer is empty");
            if (open_subtype == "distance") {
                // Must end in a unit from the table.
                const auto pos = answer.find_last_of(' ');
                if (pos == std::string::npos || !geometry::parse_length_unit(answer.substr(pos + 1))) {
                    throw ValidationError("metric answer lacks a unit: " + answer);
                }
            }
            break;
    }
}

nlohmann::json to_json(const QAPair& qa) {
    nlohmann::json j;
    j["question"] = qa.question;
    j["format"] = std::string(to_string(qa.format));
    if (qa.format == Format::MultiChoice) {
        j["options"] = qa.options.options;
        j["correct"] = qa.options.correct;
    }
    j["answer"] = qa.answer;
    if (!qa.open_subtype.empty()) j["open_subtype"] = qa.open_subtype;
    j["task"] = std::string(to_string(qa.task));
    j["category"] = qa.category;
    j["template_id"] = qa.template_id;
    j["seed"] = qa.seed;
    j["truth"] = qa.truth;
    j["source"] = qa.source;
    j["media_kind"] = qa.media_kind;
    j["media"] = qa.media;
    j["meta"] = qa.meta;
    return j;
}

std::string format_metric(double value_m, std::string_view unit) {
    const auto u = geometry::length_unit_from(unit);
    const double v = value_m * 100.0 / geometry::centimeters_per(u);
    const std::string num = format_decimal(v, 2);
    std::string name(geometry::unit_plural(u));
    if (num == "1") {
        if (u == geometry::LengthUnit::Foot) {
            name = "foot";
        } else if (u == geometry::LengthUnit::Inch) {
            name = "inch";
        } else {
            name.pop_back();
        }
    }
    return num + " " + name;
}

std::string format_matrix(const std::vector<std::vector<double>>& rows, int decimals) {
    std::string s = "[";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r) s += ", ";
        s += "[";
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c) s += ", ";
            s += format_fixed(rows[r][c], decimals);
        }
        s += "]";
    }
    return s + "]";
}

}  // namespace spatialqa::qagen
