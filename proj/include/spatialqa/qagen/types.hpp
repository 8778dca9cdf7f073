#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace spatialqa::qagen {

enum class Format { Judgment, MultiChoice, OpenEnded };
std::string_view to_string(Format f);
/// Accepts "judgment", "multi-choice", "open-ended" (and "mcq"). Throws ValidationError.
Format format_from(std::string_view s);

enum class Task {
    Existence,
    Detect3D,
    AbsDepth,
    AbsDistance,
    AbsSize,
    RelDepth,
    RelDistance,
    RelSize,
    Intrinsics,
    Extrinsics,
    CameraMotion,
    PointTracking,
    Homography,
    SpatialMap,
    MultiView,
    Rotation2D,
    Rotation3D,
};

/// Tasks compiled from scene annotations, in taxonomy order.
inline constexpr Task kSceneTasks[] = {
    Task::Existence,  Task::Detect3D,   Task::AbsDepth,     Task::AbsDistance,   Task::AbsSize,
    Task::RelDepth,   Task::RelDistance, Task::RelSize,     Task::Intrinsics,    Task::Extrinsics,
    Task::CameraMotion, Task::PointTracking, Task::Homography};
inline constexpr Task kSimulatorTasks[] = {Task::SpatialMap, Task::MultiView, Task::Rotation2D,
                                           Task::Rotation3D};

std::string_view to_string(Task t);  // snake_case id, e.g. "abs_depth"
Task task_from(std::string_view s);  // throws ValidationError
/// One of the ten benchmark categories.
std::string_view category_of(Task t);
/// Tasks whose questions name object categories (rejected for class-agnostic scenes).
bool label_dependent(Task t);

/// Ordered options with letters A, B, ...
struct OptionSet {
    std::vector<std::string> options;
    int correct = -1;

    static char letter(std::size_t i) { return static_cast<char>('A' + i); }
    char correct_letter() const { return letter(static_cast<std::size_t>(correct)); }
    /// Throws ValidationError unless options are pairwise distinct after
    /// whitespace/case normalization and `correct` is in range.
    void validate() const;
};

/// One generated question with its ground truth and provenance.
struct QAPair {
    std::string question;
    Format format = Format::OpenEnded;
    OptionSet options;    // multi-choice only
    std::string answer;   // letter, "yes"/"no", or the open answer text
    std::string open_subtype;  // counting | distance | other (open-ended only)

    Task task = Task::Existence;
    std::string category;
    std::string template_id;
    std::uint64_t seed = 0;

    /// Canonical text of the true fact ("2.5 meters", "chair", a sentence, a matrix).
    std::string truth;
    /// Candidate wrong answers, already display-formatted; first ones preferred.
    std::vector<std::string> wrong;
    /// Yes/no stem with a "{value}" slot, used for rule-based judgment conversion.
    std::string judgment_stem;

    std::string source;
    std::string media_kind;  // image | frames | video
    std::vector<std::string> media;
    /// Free-form structured record (ground-truth numbers, warnings, sidecar data).
    nlohmann::json meta = nlohmann::json::object();

    /// Throws ValidationError when the format-specific answer shape is broken.
    void validate() const;
};

nlohmann::json to_json(const QAPair& qa);

/// Display helpers shared by generators.
/// Metric value with two decimals (trailing zeros trimmed) and a spelled-out unit,
/// e.g. "2.5 meters".
std::string format_metric(double value_m, std::string_view unit = "m");
/// Row-major matrix as "[[a, b], [c, d]]" with fixed decimals.
std::string format_matrix(const std::vector<std::vector<double>>& rows, int decimals);

}  // namespace spatialqa::qagen
