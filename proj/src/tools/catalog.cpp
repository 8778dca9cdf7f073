#include "spatialqa/tools/catalog.hpp"

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"

#include <cmath>
#include <set>

namespace spatialqa::tools {

bool is_media_kind(ArgKind k) {
    return k == ArgKind::Image || k == ArgKind::ImageList || k == ArgKind::ImageOrList;
}

const ArgSpec* ToolSpec::arg(std::string_view n) const {
    for (const auto& a : args) {
        if (a.name == n) return &a;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

ArgSpec arg(std::string name, std::string description, ArgKind kind) {
    ArgSpec a;
    a.name = std::move(name);
    a.description = std::move(description);
    a.kind = kind;
    return a;
}

ArgSpec optional_arg(ArgSpec a, json def = nullptr) {
    a.required = false;
    a.default_value = std::move(def);
    return a;
}

ArgSpec two_images(std::string description) {
    auto a = arg("image", std::move(description), ArgKind::ImageList);
    a.min_items = 2;
    a.max_items = 2;
    return a;
}

ArgSpec num_keypoints() {
    auto a = optional_arg(arg("num_keypoints", "Max keypoints per image (default: 1200).", ArgKind::Int), 1200);
    a.number_positive = true;
    return a;
}

ArgSpec ratio_th(std::string description) {
    auto a = optional_arg(arg("ratio_th", std::move(description), ArgKind::Number), 0.75);
    a.number_unit_interval = true;
    return a;
}

ArgSpec scene_type() {
    auto a = arg("indoor_or_outdoor", "Scene type ('indoor' or 'outdoor').", ArgKind::Choice);
    a.choices = {"indoor", "outdoor"};
    return a;
}

json example(const std::string& name, json arguments) {
    return json{{"name", name}, {"arguments", std::move(arguments)}};
}

std::vector<ToolSpec> catalog_specs() {
    std::vector<ToolSpec> out;

    {
        ToolSpec t;
        t.name = "LocalizeObjects";
        t.description = {"Localize specific objects in an image.",
                         "Returns bounding boxes for target categories, optionally visualizing them."};
        t.args = {arg("image", "The image to analyze.", ArgKind::Image),
                  arg("objects", "A list of object categories to detect.", ArgKind::TextOrList)};
        t.rets = {{"regions", "List of detected regions with label, bbox"}};
        t.examples = {example(t.name, {{"image", "image-0"}, {"objects", {"dog", "cat"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "CountObjects";
        t.description = {"Count target objects in an image. Returns the coordinates of each detected target as points."};
        t.args = {arg("image", "The image to analyze.", ArgKind::Image),
                  arg("objects", "List of object categories to count.", ArgKind::TextOrList)};
        t.rets = {{"points", "Dictionary {category: [points...]}, points in normalized coordinates."}};
        t.examples = {example(t.name, {{"image", "image-0"}, {"objects", {"bed"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "GetObjectMask";
        t.description = {"Generate pixel-level segmentation masks for specified objects.",
                         "Returns mask area ratios and bounding boxes for each detected object.",
                         "Suitable for analyzing object shapes, sizes, and coverage."};
        t.args = {arg("image", "Image file to process.", ArgKind::Image),
                  arg("objects", "List of object descriptions to localize and segment.", ArgKind::TextOrList)};
        t.rets = {{"results",
                   "List of dicts with mask area ratio, bounding box, and optional error: [{'object': str, "
                   "'mask_area': float, 'bbox': [left, top, right, bottom], 'error': str or None}]"}};
        t.examples = {example(t.name, {{"image", "image-0"}, {"objects", {"coffee mug", "microwave"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "Detect3DObjects";
        t.description = {"Detect specific objects in an image and estimate their 3D bounding boxes.",
                         "Returns 3D bounding box parameters in the following format:",
                         "x, y, z -> object center in camera coordinates (meters);",
                         "width, height, length -> physical size (width, height, length) in meters;",
                         "yaw -> heading angle around vertical axis (radians)."};
        t.args = {arg("image", "Path to the input image.", ArgKind::ImageOrList),
                  arg("objects", "List of object categories to detect (or a single string).", ArgKind::TextOrList)};
        t.rets = {{"objects",
                   "List of dicts with {label: str, bbox_3d: {x:float, y:float, z:float, width:float, height:float, "
                   "length:float, yaw:float}}"}};
        t.examples = {example(t.name, {{"image", {"image-1"}}, {"objects", {"dog", "rabbit"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "EstimateOpticalFlow";
        t.description = {"Estimate optical flow between two images to measure motion in pixels.",
                         "Returns average displacement in horizontal (x) and vertical (y) directions.",
                         "First image is earlier in time; second is later.",
                         "- mean_flow_x > 0: objects move left / camera moves right.",
                         "- mean_flow_x < 0: objects move right / camera moves left.",
                         "- mean_flow_y > 0: objects move up / camera moves down.",
                         "- mean_flow_y < 0: objects move down / camera moves up.",
                         "Useful for analyzing camera motion, object movement, and 3D spatial reasoning."};
        t.args = {two_images(
            "A list of exactly two image paths to compute optical flow between. First image is earlier in time.")};
        t.rets = {{"output",
                   "Dictionary containing 'mean_flow_x' (average horizontal pixel displacement) and 'mean_flow_y' "
                   "(average vertical pixel displacement)."}};
        t.examples = {example(t.name, {{"image", {"image-1", "image-3"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "MatchImagesSIFT";
        t.description = {"Match keypoints between two images using SIFT.",
                         "Detects distinctive features and returns matched coordinate pairs for tasks like alignment "
                         "or recognition."};
        t.args = {two_images("List of two image paths."), num_keypoints(),
                  ratio_th("Ratio test threshold for matching (default: 0.75).")};
        t.rets = {{"matches", "List of matched coordinate pairs: [[x1, y1], [x2, y2]]."},
                  {"num_matches", "Total number of matches found."}};
        t.examples = {
            example(t.name, {{"image", {"image-0", "image-1"}}, {"num_keypoints", 1200}, {"ratio_th", 0.75}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "EstimateHomographyMatrix";
        t.description = {"Compute a 3*3 homography matrix between two images using SIFT features and RANSAC.",
                         "Useful for alignment, perspective correction, and planar transformations."};
        auto reproj = optional_arg(
            arg("ransac_reproj_threshold", "Max reprojection error in RANSAC (default: 5.0).", ArgKind::Number), 5.0);
        reproj.number_positive = true;
        auto matches = optional_arg(
            arg("matches", "Precomputed matched coordinate pairs: [[x1, y1], [x2, y2]].", ArgKind::Matches));
        matches.hidden = true;
        t.args = {two_images("List of two image paths."), num_keypoints(), ratio_th("Ratio test threshold (default: 0.75)."),
                  reproj, matches};
        t.rets = {{"homography_matrix", "3*3 matrix mapping points from first image to second."},
                  {"inliers_count", "Number of inlier matches used."},
                  {"total_matches", "Total matches found."},
                  {"status", "Success or failure."}};
        t.examples = {example(t.name, {{"image", {"image-0", "image-1"}},
                                       {"num_keypoints", 1200},
                                       {"ratio_th", 0.75},
                                       {"ransac_reproj_threshold", 5.0}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "GetCameraParametersVGGT";
        t.description = {
            "Extract camera extrinsic (3*4, relative to first image) and intrinsic (3*3) parameters from images using "
            "VGGT.",
            "Useful for 3D reconstruction, novel view synthesis, and geometric analysis."};
        auto images = arg("image", "List of image paths (at least one).", ArgKind::ImageOrList);
        images.min_items = 1;
        t.args = {images};
        t.rets = {{"output",
                   "List of dicts with image_index (int), extrinsic (3*4 matrix), and intrinsic (3*3 matrix)."}};
        t.examples = {example(t.name, {{"image", {"image-0", "image-1"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "EstimateObjectGeometryProperties";
        t.description = {
            "Analyze objects in an image to obtain bounding boxes, mask areas, depth (m), and camera parameters.",
            "Camera parameters include intrinsic (3*3) and extrinsic (3*4) matrices for 3D geometry tasks."};
        t.args = {arg("image", "Image file path to analyze.", ArgKind::Image),
                  arg("object_descs", "List of object descriptions (e.g., ['dog', 'cat']).", ArgKind::TextOrList)};
        t.rets = {{"results", "List of dicts with object, bbox, mask_area, depth (m), and optional error."},
                  {"camera_parameters", "Dict with intrinsic (3*3) and extrinsic (3*4) matrices."}};
        t.examples = {example(t.name, {{"image", "image-0"}, {"object_descs", {"coffee cup", "keyboard"}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "EstimateRegionDepth";
        t.description = {"Estimate metric depth (in meters) of specified regions in an image.",
                         "Supports indoor (0-20m) and outdoor (0-80m) scenes.",
                         "Works with single or multiple bounding boxes in pixel coordinates.",
                         "Depth is distance from camera to object, not between objects or object size."};
        auto mode = optional_arg(
            arg("mode", "Depth calculation: 'mean' (average) or 'center' (center point). Default: 'mean'.",
                ArgKind::Choice),
            "mean");
        mode.choices = {"mean", "center"};
        t.args = {arg("image", "Image to analyze.", ArgKind::Image),
                  arg("bboxes",
                      "Bounding box or list of boxes in pixel coordinates: [left, top, right, bottom] or [[...], ...].",
                      ArgKind::Boxes),
                  scene_type(), mode};
        t.rets = {{"depths",
                   "List of dicts with bbox, depth (m), and optional error: [{'bbox': list, 'depth': float, 'error': "
                   "str or None}]"},
                  {"unit", "Always 'meters'."}};
        t.examples = {example(t.name, {{"image", "image-0"},
                                       {"bboxes", {{100, 50, 200, 150}, {150, 100, 250, 200}}},
                                       {"indoor_or_outdoor", "indoor"}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "EstimateObjectDepth";
        t.description = {"Estimate object depth (in meters) from an image.",
                         "Supports indoor (0-20m) and outdoor (0-80m) scenes.",
                         "Depth indicates distance from camera to object, not between objects or object size."};
        t.args = {arg("image", "Image to analyze.", ArgKind::Image),
                  arg("objects", "List of object descriptions to measure distance to (e.g., ['dog', 'cat']).",
                      ArgKind::TextOrList),
                  scene_type()};
        t.rets = {{"results",
                   "List of dicts with object description, depth (m), and optional error: [{'object': str, 'depth': "
                   "float, 'error': str or None}]"}};
        t.examples = {example(t.name, {{"image", "image-0"},
                                       {"objects", {"the red car", "dog"}},
                                       {"indoor_or_outdoor", "outdoor"}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "GetObjectOrientation";
        t.description = {"Estimate 3D orientation of objects in an image using Orient-Anything.",
                         "Measures:",
                         "- Azimuth: Horizontal rotation (0-360° clockwise)",
                         "- Polar: Vertical inclination (0-180°)",
                         "- Rotation: In-plane rotation (-180° to +180°)",
                         "- Confidence: Reliability score",
                         "Useful for 3D understanding, pose estimation, and spatial reasoning."};
        t.args = {arg("image", "Image to analyze.", ArgKind::Image),
                  arg("objects", "Object description(s) to analyze; string or list.", ArgKind::TextOrList)};
        t.rets = {{"results",
                   "List of dicts with object orientation data: [{'object': str, 'angle_data': {'azimuth': float, "
                   "'polar': float, 'rotation': float, 'confidence': float}, 'error': str or None}]"}};
        t.examples = {example(t.name, {{"image", "image-0"}, {"objects", "a red car"}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "Get3DDistance";
        t.description = {
            "Calculates the absolute 3D spatial distance (in meters) between two pixel points (x, y) in an image.",
            "Note: this tool should be used in outdoor scenes.", "Returns the calculated distance (in meters)."};
        t.args = {arg("image", "Path to the input image.", ArgKind::Image),
                  arg("point_1", "List of [x, y] pixel coordinates for the first point.", ArgKind::Point),
                  arg("point_2", "List of [x, y] pixel coordinates for the second point.", ArgKind::Point)};
        t.rets = {{"distance_meters", "The calculated 3D distance (float, in meters)."}};
        t.examples = {
            example(t.name, {{"image", "image-0"}, {"point_1", {100, 100}}, {"point_2", {1000, 1000}}})};
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "Terminate";
        t.perception = false;
        t.description = {
            "Use this function ONLY when you are completely confident in your final answer.",
            "For multiple-choice questions: Specify the letter of the correct option.",
            "For numerical answers: Include both the specific value and appropriate unit of measurement (e.g., meter "
            "or centimeter).",
            "For yes/no questions: Clearly state 'Yes' or 'No'.",
            "DO NOT call this function if you are uncertain or need to perform additional analysis.",
            "Double-check your answer before terminating!"};
        t.args = {arg("answer",
                      "The final answer with proper formatting. For multiple choice: include letter (e.g., 'A. "
                      "explanation' or '(B)'). For numerical answers: include units (e.g., '3.25 meters').",
                      ArgKind::Text)};
        t.rets = {{"answer", "The final answer that will be submitted."}};
        for (const char* a : {"A. Yes.", "(B).", "B. 3.25 meters.", "(A) 2 inches.", "47.3 centimeters.",
                              "38.2 degrees."}) {
            t.examples.push_back(example(t.name, {{"answer", a}}));
        }
        out.push_back(std::move(t));
    }
    {
        ToolSpec t;
        t.name = "SelfThinking";
        t.perception = false;
        t.description = {"Modes:", "1. Text-only: Provide 'query' for pure language tasks.",
                         "2. Vision+Language: Provide 'images' + 'query' for visual analysis.",
                         "Suitable for: Scene understanding, OCR, object/color recognition, classification, and "
                         "concept-level Q&A."};
        t.args = {arg("query", "Text question or instruction (REQUIRED).", ArgKind::Text),
                  optional_arg(arg("image", "List of image paths. If omitted, the model performs text-only reasoning.",
                                   ArgKind::ImageOrList))};
        t.rets = {{"response", "Model's response string."}};
        t.examples = {example(t.name, {{"query", "Summarize the image content."}, {"image", "image-0"}})};
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

Registry::Registry(std::vector<ToolSpec> specs) : specs_(std::move(specs)) {
    std::set<std::string> seen;
    for (const auto& s : specs_) {
        if (s.name.empty()) throw ValidationError("tool spec with empty name");
        if (!seen.insert(s.name).second) throw ValidationError("duplicate tool name '" + s.name + "'");
        for (const auto& ex : s.examples) {
            if (ex.value("name", "") != s.name) throw ValidationError("example of " + s.name + " names another tool");
            try {
                validate_arguments(s, ex.at("arguments"));
            } catch (const std::exception& e) {
                throw ValidationError("example of " + s.name + " is invalid: " + e.what());
            }
        }
    }
}

const ToolSpec* Registry::find(std::string_view name) const {
    for (const auto& s : specs_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

const ToolSpec& Registry::at(std::string_view name) const {
    if (const auto* s = find(name)) return *s;
    throw RegistryError("unknown tool '" + std::string(name) + "'");
}

std::vector<std::string> Registry::names() const {
    std::vector<std::string> out;
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

Registry Registry::subset(std::span<const std::string> names) const {
    for (const auto& n : names) at(n);
    std::vector<ToolSpec> keep;
    for (const auto& s : specs_) {
        for (const auto& n : names) {
            if (n == s.name) {
                keep.push_back(s);
                break;
            }
        }
    }
    return Registry(std::move(keep));
}

const Registry& register_catalog() {
    static const Registry catalog(catalog_specs());
    return catalog;
}

std::vector<std::string> perception_tool_names() {
    std::vector<std::string> out;
    for (const auto& s : register_catalog().specs()) {
        if (s.perception) out.push_back(s.name);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

json normalize_numbers(const json& v) {
    if (v.is_object()) {
        json out = json::object();
        for (const auto& [k, x] : v.items()) out[k] = normalize_numbers(x);
        return out;
    }
    if (v.is_array()) {
        json out = json::array();
        for (const auto& x : v) out.push_back(normalize_numbers(x));
        return out;
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::trunc(d) && std::fabs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    }
    if (v.is_number_unsigned()) return static_cast<std::int64_t>(v.get<std::uint64_t>());
    return v;
}

}  // namespace

std::string canonical_json(const json& value) { return normalize_numbers(value).dump(); }

std::string prompt_json(const json& value) {
    if (value.is_object()) {
        std::string out = "{";
        bool first = true;
        for (const auto& [k, x] : value.items()) {
            if (!first) out += ", ";
            first = false;
            out += json(k).dump() + ": " + prompt_json(x);
        }
        return out + "}";
    }
    if (value.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i) out += ", ";
            out += prompt_json(value[i]);
        }
        return out + "]";
    }
    return value.dump();
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_toolbox_text(const Registry& registry) {
    std::string out;
    for (const auto& s : registry.specs()) {
        if (!out.empty()) out += "\n";
        out += "## " + s.name + "\n";
        out += "description = \"\"\"\n";
        for (const auto& line : s.description) out += line + "\n";
        out += "\"\"\"\n";
        out += "args_spec = {\n";
        std::vector<std::string> lines;
        for (const auto& a : s.args) {
            if (!a.hidden) lines.push_back("    " + json(a.name).dump() + ": " + json(a.description).dump());
        }
        out += join(lines, ",\n") + "\n}\n";
        lines.clear();
        out += "rets_spec = {\n";
        for (const auto& r : s.rets) lines.push_back("    " + json(r.name).dump() + ": " + json(r.description).dump());
        out += join(lines, ",\n") + "\n}\n";
        lines.clear();
        out += "examples = [\n";
        for (const auto& ex : s.examples) {
            lines.push_back("    {\"name\": " + json(s.name).dump() + ", \"arguments\": " + prompt_json(ex.at("arguments")) +
                            "}");
        }
        out += join(lines, ",\n") + "\n]\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void bad(const ArgSpec& a, const std::string& why) {
    throw ValidationError("argument '" + a.name + "': " + why);
}

bool is_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

void check_text(const ArgSpec& a, const json& v) {
    if (!v.is_string()) bad(a, "expected a string");
    if (trim(v.get<std::string>()).empty()) bad(a, "must not be empty");
}

void check_list_bounds(const ArgSpec& a, const json& v) {
    if (v.empty()) bad(a, "list must not be empty");
    if (a.min_items && v.size() < a.min_items) bad(a, "expected at least " + std::to_string(a.min_items) + " items");
    if (a.max_items && v.size() > a.max_items) bad(a, "expected at most " + std::to_string(a.max_items) + " items");
}

void check_text_list(const ArgSpec& a, const json& v) {
    if (!v.is_array()) bad(a, "expected a list of strings");
    check_list_bounds(a, v);
    for (const auto& x : v) {
        if (!x.is_string() || trim(x.get<std::string>()).empty()) bad(a, "list items must be non-empty strings");
    }
}

void check_pair(const ArgSpec& a, const json& v, const char* what) {
    if (!v.is_array() || v.size() != 2 || !is_number(v[0]) || !is_number(v[1])) bad(a, std::string("expected ") + what);
}

void check_box(const ArgSpec& a, const json& v) {
    if (!v.is_array() || v.size() != 4) bad(a, "expected [left, top, right, bottom]");
    for (const auto& x : v) {
        if (!is_number(x)) bad(a, "box coordinates must be numbers");
    }
    if (v[2].get<double>() < v[0].get<double>() || v[3].get<double>() < v[1].get<double>()) {
        bad(a, "box right/bottom must not precede left/top");
    }
}

json check_value(const ArgSpec& a, const json& v) {
    switch (a.kind) {
        case ArgKind::Image:
        case ArgKind::Text: check_text(a, v); return v;
        case ArgKind::ImageList:
        case ArgKind::TextList: check_text_list(a, v); return v;
        case ArgKind::ImageOrList:
        case ArgKind::TextOrList:
            if (v.is_string()) {
                check_text(a, v);
            } else {
                check_text_list(a, v);
            }
            return v;
        case ArgKind::Int: {
            if (!is_number(v)) bad(a, "expected an integer");
            const double d = v.get<double>();
            if (d != std::trunc(d)) bad(a, "expected an integer");
            if (a.number_positive && d <= 0) bad(a, "must be positive");
            return static_cast<std::int64_t>(d);
        }
        case ArgKind::Number: {
            if (!is_number(v)) bad(a, "expected a number");
            const double d = v.get<double>();
            if (a.number_positive && d <= 0) bad(a, "must be positive");
            if (a.number_unit_interval && (d <= 0 || d > 1)) bad(a, "must lie in (0, 1]");
            return v;
        }
        case ArgKind::Point: check_pair(a, v, "[x, y]"); return v;
        case ArgKind::Boxes:
            if (v.is_array() && !v.empty() && v[0].is_array()) {
                for (const auto& b : v) check_box(a, b);
            } else {
                check_box(a, v);
            }
            return v;
        case ArgKind::Choice: {
            if (!v.is_string()) bad(a, "expected one of " + join(a.choices, ", "));
            const auto s = to_lower(trim(v.get<std::string>()));
            for (const auto& c : a.choices) {
                if (c == s) return s;
            }
            bad(a, "expected one of " + join(a.choices, ", "));
        }
        case ArgKind::Matches:
            if (!v.is_array()) bad(a, "expected a list of [[x1, y1], [x2, y2]] pairs");
            for (const auto& m : v) {
                if (!m.is_array() || m.size() != 2) bad(a, "expected a list of [[x1, y1], [x2, y2]] pairs");
                check_pair(a, m[0], "[x1, y1]");
                check_pair(a, m[1], "[x2, y2]");
            }
            return v;
    }
    return v;
}

}  // namespace

json validate_arguments(const ToolSpec& spec, const json& arguments) {
    if (!arguments.is_object()) throw ValidationError("arguments of " + spec.name + " must be an object");
    json in = arguments;
    if (in.contains("images") && !spec.arg("images") && spec.arg("image")) {
        if (in.contains("image")) throw ValidationError("argument 'image': given both 'image' and 'images'");
        in["image"] = in["images"];
        in.erase("images");
    }
    for (const auto& [k, v] : in.items()) {
        if (!spec.arg(k)) throw ValidationError("argument '" + k + "': not accepted by " + spec.name);
    }
    json out = json::object();
    for (const auto& a : spec.args) {
        const auto it = in.find(a.name);
        if (it == in.end() || it->is_null()) {
            if (a.required) bad(a, "required by " + spec.name);
            if (!a.default_value.is_null()) out[a.name] = a.default_value;
            continue;
        }
        out[a.name] = check_value(a, *it);
    }
    return out;
}

}  // namespace spatialqa::tools
