#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/common/rng.hpp"
#include "spatialqa/geometry/box3d.hpp"
#include "spatialqa/geometry/transform.hpp"
#include "spatialqa/qagen/types.hpp"

namespace spatialqa::qagen {

struct Frame {
    std::string image;  // path relative to the media root
    int width = 0;
    int height = 0;
    geometry::CameraPose pose;
};

/// Pixel positions of one physical point, one entry per frame.
struct PointTrack {
    std::vector<std::array<double, 2>> points;
};

struct HomographyPair {
    std::string source_image;
    std::string target_image;
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
};

/// Annotations of one scene. Boxes live in the first frame's camera coordinates.
struct SceneMeta {
    std::string scene_id;
    std::string source;
    bool class_agnostic = false;
    std::vector<Frame> frames;
    std::vector<geometry::Box3D> boxes;
    std::vector<PointTrack> tracks;
    std::optional<HomographyPair> homography;

    /// Throws LoadError on broken references or invalid geometry.
    void validate() const;
};

/// Scene document (JSON), see README for the schema. Throws LoadError.
SceneMeta scene_from_json(const nlohmann::json& j);
SceneMeta load_scene(const std::filesystem::path& path);
nlohmann::json scene_to_json(const SceneMeta& s);

struct GenerateOptions {
    int num_distractors = 3;
    std::string unit = "m";  // display unit for metric answers
    int max_retries = 10;
};

/// Compiles one QAPair for `task` from the scene annotations. Throws
/// UnsupportedTaskError when the scene lacks what the task needs (or the
/// task is label-dependent and the scene is class-agnostic, or the format is
/// not offered for the task). Deterministic given rng state.
QAPair generate_from_scene(const SceneMeta& scene, Task task, Rng& rng, Format format,
                           const GenerateOptions& opts = {});

/// Which formats generate_from_scene offers for a task.
std::vector<Format> formats_for(Task task);

/// Object categories used to pose negative existence questions.
const std::vector<std::string>& existence_vocabulary();

}  // namespace spatialqa::qagen
