#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spatialqa/qagen/types.hpp"

namespace spatialqa::corpus {

/// The ten benchmark categories; anything else is rejected.
inline constexpr std::array<std::string_view, 10> kCategories = {
    "Mental Animation", "Counting",    "Depth Estimation", "Object Distance",    "Object Motion",
    "View Reasoning",   "Object Size", "Camera",           "Temporal Reasoning", "Object Localization"};
bool is_category(std::string_view name);

enum class MediaKind { Image, Frames, Video };
std::string_view to_string(MediaKind k);
MediaKind media_kind_from(std::string_view s);  // throws ValidationError

enum class Modality { SingleImage, MultiImage, Video };
std::string_view to_string(Modality m);

struct Sample {
    std::string id;
    std::string question;
    qagen::Format format = qagen::Format::MultiChoice;
    std::vector<std::string> options;  // multi-choice only, in letter order
    std::string answer;                // letter, yes/no, or open answer text
    std::string open_subtype;          // counting | distance | other, open-ended only
    MediaKind media_kind = MediaKind::Image;
    std::vector<std::string> media;    // paths relative to the media root
    std::string task;
    std::string category;
    std::string source;
    nlohmann::json meta = nlohmann::json::object();

    Modality modality() const;
    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Converts a generated pair into a manifest record.
Sample sample_from_qa(const qagen::QAPair& qa, std::string id);

nlohmann::json to_json(const Sample& s);
/// Throws ValidationError naming the missing or malformed field.
Sample sample_from_json(const nlohmann::json& j);

struct Manifest {
    /// Dataset-level header: name, version, seed, tool version, config hash, counts.
    nlohmann::json info = nlohmann::json::object();
    std::vector<Sample> samples;

    /// Throws ValidationError on duplicate ids or header counts that disagree with the body.
    void validate() const;
    const Sample* find(std::string_view id) const;
};

struct LoadOptions {
    bool check_media = false;
    /// Media root; SPATIALQA_MEDIA_ROOT overrides it when set.
    std::filesystem::path media_root;
};

/// Reads a line-delimited manifest. An optional first line {"manifest": {...}}
/// carries the header. Throws LoadError listing every bad line with its number.
Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& opts = {});
Manifest parse_manifest(std::string_view text, const LoadOptions& opts = {});

/// Canonical encoding: header line (when info is non-empty) then one record per
/// line, keys sorted, compact separators, trailing newline.
std::string manifest_to_string(const Manifest& m);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

/// Header "counts" block computed from the body.
nlohmann::json count_summary(const Manifest& m);

/// Effective media root: SPATIALQA_MEDIA_ROOT when set, else `fallback`.
std::filesystem::path media_root(const std::filesystem::path& fallback = {});
std::filesystem::path resolve_media(const std::string& ref, const std::filesystem::path& root);

/// Evenly spaced frame indices over [0, frame_count - 1]: nearest-integer
/// linspace, deduplicated ascending. All frames when frame_count <= n.
/// Throws ValidationError when frame_count == 0 or n < 1.
std::vector<int> sample_frames(int frame_count, int n = 32);
std::vector<std::string> sample_frames(const std::vector<std::string>& frames, int n = 32);

struct StatsReport {
    std::size_t total = 0;
    std::map<std::string, std::size_t> by_format;
    std::map<std::string, std::size_t> by_modality;
    std::map<std::string, std::size_t> by_task;
    std::map<std::string, std::size_t> by_category;
    std::map<std::string, std::size_t> by_source;

    nlohmann::json to_json() const;
    /// Fixed-width text table.
    std::string to_table() const;
};

StatsReport stats(const Manifest& m);

}  // namespace spatialqa::corpus
