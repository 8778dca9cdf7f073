#include "spatialqa/qagen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/geometry/homography.hpp"
#include "spatialqa/geometry/motion.hpp"
#include "spatialqa/geometry/units.hpp"
#include "spatialqa/qagen/convert.hpp"
#include "spatialqa/qagen/distractors.hpp"
#include "spatialqa/qagen/templates.hpp"

namespace spatialqa::qagen {

using nlohmann::json;
using geometry::Box3D;
using geometry::Vec3;

// ---------------------------------------------------------------------------
// Scene documents

namespace {

Vec3 vec3_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw LoadError(what + " must be a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw LoadError(what + " must be a matrix");
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != j[0].size()) throw LoadError(what + " has ragged rows");
        for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json matrix_to(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

void SceneMeta::validate() const {
    if (scene_id.empty()) throw LoadError("scene_id is required");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        try {
            frames[i].pose.intrinsics.validate(frames[i].width, frames[i].height);
        } catch (const ValidationError& e) {
            throw LoadError("frame " + std::to_string(i) + ": " + e.what());
        }
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        try {
            boxes[i].validate();
        } catch (const ValidationError& e) {
            throw LoadError("box " + std::to_string(i) + ": " + e.what());
        }
        if (!class_agnostic && boxes[i].label.empty()) {
            throw LoadError("box " + std::to_string(i) + " has no label");
        }
    }
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (tracks[i].points.size() != frames.size()) {
            throw LoadError("track " + std::to_string(i) + " must have one point per frame");
        }
    }
    if (!boxes.empty() && frames.empty()) throw LoadError("boxes need at least one frame");
}

SceneMeta scene_from_json(const json& j) {
    try {
        if (!j.is_object()) throw LoadError("scene document must be an object");
        SceneMeta s;
        s.scene_id = j.at("scene_id").get<std::string>();
        s.source = j.value("source", "");
        s.class_agnostic = j.value("class_agnostic", false);
        for (const auto& f : j.value("frames", json::array())) {
            Frame fr;
            fr.image = f.at("image").get<std::string>();
            fr.width = f.value("width", 0);
            fr.height = f.value("height", 0);
            const auto& k = f.at("intrinsics");
            fr.pose.intrinsics.fx = k.at("fx").get<double>();
            fr.pose.intrinsics.fy = k.at("fy").get<double>();
            fr.pose.intrinsics.cx = k.at("cx").get<double>();
            fr.pose.intrinsics.cy = k.at("cy").get<double>();
            fr.pose.intrinsics.skew = k.value("skew", 0.0);
            if (f.contains("extrinsic")) {
                try {
                    fr.pose.extrinsic = geometry::RigidTransform::from_matrix(matrix_from(f["extrinsic"], "extrinsic"));
                } catch (const ValidationError& e) {
                    throw LoadError(std::string("extrinsic: ") + e.what());
                }
            }
            s.frames.push_back(std::move(fr));
        }
        for (const auto& b : j.value("boxes", json::array())) {
            Box3D box;
            const std::string label = b.value("label", "");
            if (b.contains("corners")) {
                const auto& c = b["corners"];
                if (!c.is_array() || c.size() != 8) throw LoadError("box corners must list 8 points");
                std::array<Vec3, 8> pts;
                for (int i = 0; i < 8; ++i) pts[i] = vec3_from(c[i], "corner");
                box = Box3D::from_corners(pts, label);
            } else {
                box.center = vec3_from(b.at("center"), "center");
                box.size = vec3_from(b.at("size"), "size");
                box.yaw = geometry::wrap_angle(b.value("yaw", 0.0));
                box.label = label;
            }
            s.boxes.push_back(std::move(box));
        }
        for (const auto& t : j.value("tracks", json::array())) {
            PointTrack tr;
            for (const auto& p : t.at("points")) {
                if (!p.is_array() || p.size() != 2) throw LoadError("track points must be [x, y]");
                tr.points.push_back({p[0].get<double>(), p[1].get<double>()});
            }
            s.tracks.push_back(std::move(tr));
        }
        if (j.contains("homography")) {
            const auto& h = j["homography"];
            HomographyPair hp;
            hp.source_image = h.at("source_image").get<std::string>();
            hp.target_image = h.at("target_image").get<std::string>();
            const auto m = matrix_from(h.at("matrix"), "homography");
            if (m.rows() != 3 || m.cols() != 3) throw LoadError("homography must be 3x3");
            try {
                hp.matrix = geometry::Homography(m).matrix();
            } catch (const ValidationError& e) {
                throw LoadError(std::string("homography: ") + e.what());
            }
            s.homography = hp;
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw LoadError(std::string("scene document: ") + e.what());
    }
}

SceneMeta load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open scene file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    try {
        return scene_from_json(j);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

json scene_to_json(const SceneMeta& s) {
    json j;
    j["scene_id"] = s.scene_id;
    j["source"] = s.source;
    j["class_agnostic"] = s.class_agnostic;
    j["frames"] = json::array();
    for (const auto& f : s.frames) {
        const auto& k = f.pose.intrinsics;
        j["frames"].push_back({{"image", f.image},
                               {"width", f.width},
                               {"height", f.height},
                               {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"skew", k.skew}}},
                               {"extrinsic", matrix_to(f.pose.extrinsic.matrix4())}});
    }
    j["boxes"] = json::array();
    for (const auto& b : s.boxes) {
        j["boxes"].push_back(
            {{"label", b.label}, {"center", vec3_to(b.center)}, {"size", vec3_to(b.size)}, {"yaw", b.yaw}});
    }
    j["tracks"] = json::array();
    for (const auto& t : s.tracks) {
        json pts = json::array();
        for (const auto& p : t.points) pts.push_back({p[0], p[1]});
        j["tracks"].push_back({{"points", pts}});
    }
    if (s.homography) {
        j["homography"] = {{"source_image", s.homography->source_image},
                           {"target_image", s.homography->target_image},
                           {"matrix", matrix_to(s.homography->matrix)}};
    }
    return j;
}

const std::vector<std::string>& existence_vocabulary() {
    static const std::vector<std::string> kVocab = {
        "chair",    "table",  "sofa",     "bed",     "lamp",    "door",     "window",  "cabinet",
        "shelf",    "desk",   "monitor",  "laptop",  "bottle",  "cup",      "plant",   "picture",
        "pillow",   "toilet", "sink",     "bathtub", "refrigerator", "oven", "microwave", "television",
        "car",      "truck",  "bicycle",  "motorcycle", "bus",  "pedestrian", "traffic light", "bench",
        "box",      "bag",    "book",     "clock",   "vase",    "curtain",  "mirror",  "stove",
    };
    return kVocab;
}

std::vector<Format> formats_for(Task task) {
    switch (task) {
        case Task::Existence: return {Format::Judgment};
        case Task::RelDepth:
        case Task::RelDistance:
        case Task::RelSize: return {Format::MultiChoice, Format::Judgment};
        case Task::SpatialMap:
        case Task::MultiView:
        case Task::Rotation2D:
        case Task::Rotation3D: return {Format::MultiChoice};
        default: return {Format::MultiChoice, Format::Judgment, Format::OpenEnded};
    }
}

// ---------------------------------------------------------------------------
// Generation

namespace {

using Slots = std::vector<std::pair<std::string_view, std::string>>;

std::string fill_slots(std::string_view text, const Slots& slots) { return fill(text, slots); }

[[noreturn]] void unsupported(Task t, const std::string& why) {
    throw UnsupportedTaskError(std::string(to_string(t)) + ": " + why);
}

// Boxes whose label occurs exactly once, so the question names one object.
std::vector<const Box3D*> unique_boxes(const SceneMeta& s) {
    std::map<std::string, int> count;
    for (const auto& b : s.boxes) ++count[b.label];
    std::vector<const Box3D*> out;
    for (const auto& b : s.boxes) {
        if (!b.label.empty() && count[b.label] == 1) out.push_back(&b);
    }
    return out;
}

std::string list_objects(const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) s += (i + 1 == names.size()) ? " and " : ", ";
        s += "the " + names[i];
    }
    return s;
}

std::string corners_text(const std::array<Vec3, 8>& c) {
    std::vector<std::vector<double>> rows;
    for (const auto& p : c) rows.push_back({p.x(), p.y(), p.z()});
    return format_matrix(rows, 2);
}

std::string transform_text(const geometry::RigidTransform& t) {
    const geometry::Mat4 m = t.matrix4();
    std::vector<std::vector<double>> rows(4, std::vector<double>(4));
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) rows[r][c] = m(r, c);
    return format_matrix(rows, 4);
}

std::string mat3_text(const Eigen::Matrix3d& m) {
    std::vector<std::vector<double>> rows(3, std::vector<double>(3));
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rows[r][c] = m(r, c);
    return format_matrix(rows, 4);
}

std::string point_text(double x, double y) { return "(" + format_decimal(x, 1) + ", " + format_decimal(y, 1) + ")"; }

struct Draft {
    QAPair qa;
    // Multi-choice question text when it differs from the open-ended one.
    std::optional<std::string> mc_question;
    std::optional<std::string> mc_template;
};

void image_media(QAPair& qa, const SceneMeta& s, std::initializer_list<std::size_t> frames) {
    qa.media_kind = "image";
    for (std::size_t f : frames) qa.media.push_back(s.frames[f].image);
}

std::pair<std::size_t, std::size_t> frame_pair(const SceneMeta& s, Rng& rng) {
    const std::size_t i = rng.index(s.frames.size() - 1);
    const std::size_t j = i + 1 + rng.index(s.frames.size() - 1 - i);
    return {i, j};
}

void add_metric(Draft& d, double gt_m, const GenerateOptions& o, Rng& rng, int n) {
    const auto unit = geometry::length_unit_from(o.unit);
    const double per = geometry::centimeters_per(unit) / 100.0;  // meters per display unit
    const double gt_disp = gt_m / per;
    d.qa.truth = format_metric(gt_m, o.unit);
    for (double v : metric_distractors(gt_disp, n, rng)) d.qa.wrong.push_back(format_metric(v * per, o.unit));
    d.qa.open_subtype = "distance";
    d.qa.meta["gt_value"] = std::stod(format_decimal(gt_disp, 2));
    d.qa.meta["gt_unit"] = std::string(geometry::unit_symbol(unit));
}

Draft draft_existence(const SceneMeta& s, Rng& rng) {
    std::set<std::string> present;
    for (const auto& b : s.boxes) present.insert(b.label);
    if (present.empty()) unsupported(Task::Existence, "scene has no labeled boxes");
    if (s.frames.empty()) unsupported(Task::Existence, "scene has no frames");
    std::vector<std::string> labels(present.begin(), present.end());
    Draft d;
    const auto t = choose_template(Task::Existence, rng);
    d.qa.template_id = t.id;
    d.qa.truth = labels[rng.index(labels.size())];
    for (const auto& v : existence_vocabulary()) {
        if (!present.count(v)) d.qa.wrong.push_back(v);
    }
    d.qa.question = fill_slots(t.text, {{"category", d.qa.truth}});
    d.qa.judgment_stem = fill_slots(t.text, {{"category", "{value}"}});
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_detect3d(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    const auto boxes = unique_boxes(s);
    if (boxes.empty()) unsupported(Task::Detect3D, "no uniquely labeled box");
    const Box3D& b = *boxes[rng.index(boxes.size())];
    Draft d;
    const auto t = choose_template(Task::Detect3D, rng);
    d.qa.template_id = t.id;
    d.qa.question = fill_slots(t.text, {{"object_name", b.label}});
    d.qa.truth = corners_text(b.corners());
    for (const auto& c : box_distractors(b, rng, o.num_distractors)) d.qa.wrong.push_back(corners_text(c));
    d.qa.open_subtype = "other";
    d.qa.judgment_stem = "Is {value} the 3D bounding box of the " + b.label + "?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_abs_depth(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    auto boxes = unique_boxes(s);
    std::erase_if(boxes, [](const Box3D* b) { return !(b->center.z() > 0.0); });
    if (boxes.empty()) unsupported(Task::AbsDepth, "no uniquely labeled box in front of the camera");
    const Box3D& b = *boxes[rng.index(boxes.size())];
    Draft d;
    const auto t = choose_template(Task::AbsDepth, rng);
    d.qa.template_id = t.id;
    const std::string unit_name(geometry::unit_plural(geometry::length_unit_from(o.unit)));
    d.qa.question = fill_slots(t.text, {{"object_name", b.label}, {"unit", unit_name}});
    add_metric(d, geometry::box_metrics(b).depth_a, o, rng, o.num_distractors);
    d.qa.judgment_stem = "Is the " + b.label + " approximately {value} from the camera?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_abs_distance(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    auto boxes = unique_boxes(s);
    if (boxes.size() < 2) unsupported(Task::AbsDistance, "needs two uniquely labeled boxes");
    rng.shuffle(std::span<const Box3D*>(boxes));
    const Box3D& a = *boxes[0];
    const Box3D& b = *boxes[1];
    const double dist = geometry::box_metrics(a, b).center_distance;
    if (!(dist > 0.0)) unsupported(Task::AbsDistance, "coincident boxes");
    Draft d;
    const auto t = choose_template(Task::AbsDistance, rng);
    d.qa.template_id = t.id;
    d.qa.question = fill_slots(t.text, {{"object1", a.label}, {"object2", b.label}});
    add_metric(d, dist, o, rng, o.num_distractors);
    d.qa.judgment_stem =
        "Is the distance between the " + a.label + " and the " + b.label + " approximately {value}?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_abs_size(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    const auto boxes = unique_boxes(s);
    if (boxes.empty()) unsupported(Task::AbsSize, "no uniquely labeled box");
    const Box3D& b = *boxes[rng.index(boxes.size())];
    static const std::array<const char*, 3> kNoun = {"width", "height", "length"};
    static const std::array<const char*, 3> kAdj = {"wide", "tall", "long"};
    const std::size_t dim = rng.index(3);
    Draft d;
    const auto t = choose_template(Task::AbsSize, rng);
    d.qa.template_id = t.id;
    const std::string unit_name(geometry::unit_plural(geometry::length_unit_from(o.unit)));
    // The HOW_DIMENSION frame ("How {dimension} is ...") needs the adjective.
    const std::string dim_word = t.family == "HOW_DIMENSION" ? kAdj[dim] : kNoun[dim];
    d.qa.question = fill_slots(t.text, {{"object_name", b.label},
                                        {"dimension", dim_word},
                                        {"dimension_adj", kAdj[dim]},
                                        {"dimension_type", "in " + unit_name}});
    add_metric(d, b.size[static_cast<int>(dim)], o, rng, o.num_distractors);
    d.qa.meta["dimension"] = kNoun[dim];
    d.qa.judgment_stem = std::string("Is the ") + kNoun[dim] + " of the " + b.label + " approximately {value}?";
    image_media(d.qa, s, {0});
    return d;
}

// Chooses a subset whose argmin is separated from the runner-up by `gap`.
template <typename Score>
std::optional<std::vector<const Box3D*>> pick_ranked(std::vector<const Box3D*> pool, std::size_t m, Rng& rng,
                                                      Score score, double gap) {
    rng.shuffle(std::span<const Box3D*>(pool));
    pool.resize(std::min(m, pool.size()));
    std::sort(pool.begin(), pool.end(), [&](const Box3D* a, const Box3D* b) { return score(*a) < score(*b); });
    if (pool.size() < 2 || score(*pool[1]) - score(*pool[0]) < gap) return std::nullopt;
    return pool;
}

Draft draft_rel_depth(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    const auto boxes = unique_boxes(s);
    if (boxes.size() < 2) unsupported(Task::RelDepth, "needs two uniquely labeled boxes");
    const auto depth = [](const Box3D& b) { return b.center.z(); };
    auto ranked = pick_ranked(boxes, static_cast<std::size_t>(o.num_distractors) + 1, rng, depth, 0.05);
    if (!ranked) throw GenerationError("closest object is not separated from the runner-up");
    Draft d;
    const auto t = choose_template(Task::RelDepth, rng);
    d.qa.template_id = t.id;
    d.qa.question = std::string(t.text);
    d.qa.truth = (*ranked)[0]->label;
    std::vector<std::string> names;
    for (const auto* b : *ranked) names.push_back(b->label);
    for (std::size_t i = 1; i < ranked->size(); ++i) d.qa.wrong.push_back((*ranked)[i]->label);
    std::vector<std::string> sorted = names;
    std::sort(sorted.begin(), sorted.end());
    d.qa.judgment_stem = "Among " + list_objects(sorted) + ", is the {value} the closest to the camera?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_rel_distance(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    auto boxes = unique_boxes(s);
    if (boxes.size() < 3) unsupported(Task::RelDistance, "needs three uniquely labeled boxes");
    const std::size_t ri = rng.index(boxes.size());
    const Box3D& ref = *boxes[ri];
    boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(ri));
    const auto dist = [&](const Box3D& b) { return geometry::box_metrics(ref, b).center_distance; };
    auto ranked = pick_ranked(boxes, static_cast<std::size_t>(o.num_distractors) + 1, rng, dist, 0.05);
    if (!ranked) throw GenerationError("closest object is not separated from the runner-up");
    Draft d;
    const auto t = choose_template(Task::RelDistance, rng);
    d.qa.template_id = t.id;
    d.qa.question = fill_slots(t.text, {{"reference", ref.label}});
    d.qa.truth = (*ranked)[0]->label;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < ranked->size(); ++i) {
        names.push_back((*ranked)[i]->label);
        if (i > 0) d.qa.wrong.push_back((*ranked)[i]->label);
    }
    std::sort(names.begin(), names.end());
    d.qa.judgment_stem = "Among " + list_objects(names) + ", is the {value} the closest to the " + ref.label + "?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_rel_size(const SceneMeta& s, Rng& rng) {
    auto boxes = unique_boxes(s);
    if (boxes.size() < 2) unsupported(Task::RelSize, "needs two uniquely labeled boxes");
    rng.shuffle(std::span<const Box3D*>(boxes));
    const Box3D& a = *boxes[0];
    const Box3D& b = *boxes[1];
    static const std::array<const char*, 3> kDim = {"WIDTH", "HEIGHT", "LENGTH"};
    const std::size_t dim = rng.index(3);
    const bool larger = rng.bernoulli(0.5);
    const double va = a.size[static_cast<int>(dim)];
    const double vb = b.size[static_cast<int>(dim)];
    if (std::abs(va - vb) < 0.02 * std::max(va, vb)) throw GenerationError("sizes too close to compare");
    const std::string family = std::string(kDim[dim]) + (larger ? "_LARGER" : "_SMALLER");
    Draft d;
    const auto t = choose_template(Task::RelSize, rng, family);
    d.qa.template_id = t.id;
    d.qa.question = fill_slots(t.text, {{"object1", a.label}, {"object2", b.label}});
    const bool a_wins = larger ? va > vb : va < vb;
    d.qa.truth = a_wins ? a.label : b.label;
    d.qa.wrong = {a_wins ? b.label : a.label};
    static const std::array<const char*, 3> kBig = {"wider", "taller", "longer"};
    static const std::array<const char*, 3> kSmall = {"narrower", "shorter", "shorter in length"};
    d.qa.judgment_stem = "Between the " + a.label + " and the " + b.label + ", is the {value} the " +
                         (larger ? kBig[dim] : kSmall[dim]) + " one?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_intrinsics(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    if (s.frames.empty()) unsupported(Task::Intrinsics, "scene has no frames");
    const auto& k = s.frames[0].pose.intrinsics;
    const auto t = choose_template(Task::Intrinsics, rng);
    const std::string fam(t.family);
    auto render = [&](const geometry::CameraIntrinsics& c) -> std::string {
        if (fam == "FOCAL_LENGTH") return "fx = " + format_fixed(c.fx, 1) + ", fy = " + format_fixed(c.fy, 1);
        if (fam == "PRINCIPAL_POINT") return "(" + format_fixed(c.cx, 1) + ", " + format_fixed(c.cy, 1) + ")";
        if (fam == "FOCAL_LENGTH_X") return format_fixed(c.fx, 1) + " pixels";
        if (fam == "FOCAL_LENGTH_Y") return format_fixed(c.fy, 1) + " pixels";
        return format_fixed(c.fx / c.fy, 3);
    };
    std::string quantity = "focal length aspect ratio (fx/fy)";
    if (fam == "FOCAL_LENGTH") quantity = "focal length";
    if (fam == "PRINCIPAL_POINT") quantity = "principal point";
    if (fam == "FOCAL_LENGTH_X") quantity = "horizontal focal length (fx)";
    if (fam == "FOCAL_LENGTH_Y") quantity = "vertical focal length (fy)";

    Draft d;
    d.qa.template_id = t.id;
    d.qa.question = std::string(t.text);
    d.qa.truth = render(k);
    std::set<std::string> seen = {d.qa.truth};
    for (int round = 0; static_cast<int>(d.qa.wrong.size()) < o.num_distractors; ++round) {
        if (round > 20) throw GenerationError("intrinsics distractors collapse at display precision");
        for (const auto& c : intrinsics_distractors(k, rng, o.num_distractors)) {
            const std::string r = render(c);
            if (static_cast<int>(d.qa.wrong.size()) < o.num_distractors && seen.insert(r).second) {
                d.qa.wrong.push_back(r);
            }
        }
    }
    d.qa.open_subtype = "other";
    d.qa.meta["quantity"] = fam;
    d.qa.judgment_stem = "Is the " + quantity + " of the camera {value}?";
    image_media(d.qa, s, {0});
    return d;
}

Draft draft_extrinsics(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    if (s.frames.size() < 2) unsupported(Task::Extrinsics, "needs two frames");
    const auto [i, j] = frame_pair(s, rng);
    const auto rel = geometry::relative_transform(s.frames[i].pose.extrinsic, s.frames[j].pose.extrinsic);
    Draft d;
    const auto t = choose_template(Task::Extrinsics, rng);
    d.qa.template_id = t.id;
    d.qa.question = std::string(t.text);
    d.qa.truth = transform_text(rel);
    std::set<std::string> seen = {d.qa.truth};
    for (const auto& x : extrinsics_distractors(rel, rng, o.num_distractors)) {
        const std::string txt = transform_text(x.transform);
        if (seen.insert(txt).second) d.qa.wrong.push_back(txt);
    }
    d.qa.open_subtype = "other";
    d.qa.judgment_stem =
        "Is the transformation matrix from the first camera coordinate system to the second camera "
        "coordinate system in OpenCV convention {value}?";
    image_media(d.qa, s, {i, j});
    return d;
}

Draft draft_camera_motion(const SceneMeta& s, Rng& rng, const GenerateOptions& o, Format format) {
    if (s.frames.size() < 2) unsupported(Task::CameraMotion, "needs two frames");
    const auto [i, j] = frame_pair(s, rng);
    const auto motion = geometry::camera_motion_between(s.frames[i].pose.extrinsic, s.frames[j].pose.extrinsic);
    const auto report = geometry::classify_motion(motion);
    Draft d;
    const auto t = choose_template(Task::CameraMotion, rng,
                                   format == Format::MultiChoice ? "multi_choice" : "open_ended");
    d.qa.template_id = t.id;
    d.qa.question = std::string(t.text);
    d.qa.truth = geometry::describe_motion(report);
    d.qa.wrong = motion_distractors(report, rng, o.num_distractors);
    d.qa.open_subtype = "other";
    d.qa.judgment_stem =
        "Does the statement \"{value}\" correctly describe the camera motion between the two images?";
    json states = json::object();
    for (auto dof : geometry::kAllDofs) {
        states[std::string(geometry::to_string(dof))] = {
            {"state", std::string(geometry::to_string(report[dof].state))}, {"value", report[dof].value}};
    }
    d.qa.meta["motion"] = states;
    image_media(d.qa, s, {i, j});
    return d;
}

Draft draft_point_tracking(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    if (s.frames.size() < 2 || s.tracks.empty()) unsupported(Task::PointTracking, "needs tracks over two frames");
    const auto [i, j] = frame_pair(s, rng);
    const std::size_t ti = rng.index(s.tracks.size());
    const auto& p1 = s.tracks[ti].points[i];
    const auto& p2 = s.tracks[ti].points[j];
    Draft d;
    const auto t = choose_template(Task::PointTracking, rng);
    d.qa.template_id = t.id;
    const std::string x1 = format_decimal(p1[0], 1);
    const std::string y1 = format_decimal(p1[1], 1);
    d.qa.question = fill_slots(t.text, {{"x1", x1}, {"y1", y1}});
    d.qa.truth = point_text(p2[0], p2[1]);
    std::set<std::string> seen = {d.qa.truth};
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < s.tracks.size(); ++k) {
        if (k != ti) others.push_back(k);
    }
    rng.shuffle(std::span<std::size_t>(others));
    for (std::size_t k : others) {
        const auto& q = s.tracks[k].points[j];
        if (std::hypot(q[0] - p2[0], q[1] - p2[1]) < 10.0) continue;
        if (static_cast<int>(d.qa.wrong.size()) < o.num_distractors && seen.insert(point_text(q[0], q[1])).second) {
            d.qa.wrong.push_back(point_text(q[0], q[1]));
        }
    }
    // Random non-corresponding points when the scene has too few tracks.
    const double w = s.frames[j].width > 0 ? s.frames[j].width : 640.0;
    const double h = s.frames[j].height > 0 ? s.frames[j].height : 480.0;
    for (int guard = 0; static_cast<int>(d.qa.wrong.size()) < o.num_distractors; ++guard) {
        if (guard > 1000) throw GenerationError("could not place point-tracking distractors");
        const double x = std::round(rng.uniform(0, w - 1));
        const double y = std::round(rng.uniform(0, h - 1));
        if (std::hypot(x - p2[0], y - p2[1]) < 20.0) continue;
        if (seen.insert(point_text(x, y)).second) d.qa.wrong.push_back(point_text(x, y));
    }
    d.qa.open_subtype = "other";
    d.qa.judgment_stem = "In the first image, there is a point at coordinates (" + x1 + ", " + y1 +
                         "). Does it correspond to the point {value} in the second image?";
    image_media(d.qa, s, {i, j});
    return d;
}

Draft draft_homography(const SceneMeta& s, Rng& rng, const GenerateOptions& o) {
    if (!s.homography) unsupported(Task::Homography, "scene has no homography pair");
    Draft d;
    const auto t = choose_template(Task::Homography, rng);
    d.qa.template_id = t.id;
    d.qa.question = std::string(t.text);
    d.qa.truth = mat3_text(s.homography->matrix);
    std::set<std::string> seen = {d.qa.truth};
    for (const auto& m : homography_distractors(s.homography->matrix, rng, o.num_distractors)) {
        if (seen.insert(mat3_text(m)).second) d.qa.wrong.push_back(mat3_text(m));
    }
    d.qa.open_subtype = "other";
    d.qa.judgment_stem =
        "Is the homography matrix that transforms the original image to the given transformed image {value}?";
    d.qa.media_kind = "image";
    d.qa.media = {s.homography->source_image, s.homography->target_image};
    return d;
}

Draft make_draft(const SceneMeta& s, Task task, Rng& rng, Format format, const GenerateOptions& o) {
    switch (task) {
        case Task::Existence: return draft_existence(s, rng);
        case Task::Detect3D: return draft_detect3d(s, rng, o);
        case Task::AbsDepth: return draft_abs_depth(s, rng, o);
        case Task::AbsDistance: return draft_abs_distance(s, rng, o);
        case Task::AbsSize: return draft_abs_size(s, rng, o);
        case Task::RelDepth: return draft_rel_depth(s, rng, o);
        case Task::RelDistance: return draft_rel_distance(s, rng, o);
        case Task::RelSize: return draft_rel_size(s, rng);
        case Task::Intrinsics: return draft_intrinsics(s, rng, o);
        case Task::Extrinsics: return draft_extrinsics(s, rng, o);
        case Task::CameraMotion: return draft_camera_motion(s, rng, o, format);
        case Task::PointTracking: return draft_point_tracking(s, rng, o);
        case Task::Homography: return draft_homography(s, rng, o);
        default: unsupported(task, "not a scene task");
    }
}

}  // namespace

QAPair generate_from_scene(const SceneMeta& scene, Task task, Rng& rng, Format format, const GenerateOptions& o) {
    const auto allowed = formats_for(task);
    if (std::find(allowed.begin(), allowed.end(), format) == allowed.end()) {
        unsupported(task, "format " + std::string(to_string(format)) + " not offered");
    }
    if (scene.class_agnostic && label_dependent(task)) unsupported(task, "scene is class-agnostic");
    if (o.num_distractors < 1) throw ConfigError("num_distractors must be >= 1");

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, o.max_retries); ++attempt) {
        try {
            Draft d = make_draft(scene, task, rng, format, o);
            QAPair qa = std::move(d.qa);
            qa.task = task;
            qa.category = std::string(category_of(task));
            qa.seed = rng.seed();
            qa.source = scene.source;
            qa.meta["scene_id"] = scene.scene_id;
            QAPair out;
            switch (format) {
                case Format::OpenEnded:
                    out = qa;
                    out.format = Format::OpenEnded;
                    out.answer = qa.truth;
                    break;
                case Format::MultiChoice: {
                    std::vector<std::string> picks(qa.wrong.begin(),
                                                   qa.wrong.begin() + std::min<std::size_t>(qa.wrong.size(), o.num_distractors));
                    out = to_multiple_choice(qa, picks, rng);
                    break;
                }
                case Format::Judgment: out = to_judgment(qa, rng); break;
            }
            out.meta["attempts"] = attempt + 1;
            out.validate();
            return out;
        } catch (const GenerationError& e) {
            last_error = e.what();
        }
    }
    throw GenerationError(std::string(to_string(task)) + ": gave up after retries: " + last_error);
}

}  // namespace spatialqa::qagen
