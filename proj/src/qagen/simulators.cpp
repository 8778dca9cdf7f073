#include "spatialqa/qagen/simulators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"
#include "spatialqa/qagen/convert.hpp"
#include "spatialqa/qagen/templates.hpp"

namespace spatialqa::qagen {

using geometry::ColorGrid;
using geometry::Voxel;
using geometry::VoxelShape;
using nlohmann::json;

namespace {

constexpr int kRetryBound = 500;

QAPair base_pair(Task task, Rng& rng, const ChosenTemplate& t) {
    QAPair qa;
    qa.task = task;
    qa.category = std::string(category_of(task));
    qa.template_id = t.id;
    qa.seed = rng.seed();
    qa.source = "simulator";
    qa.media_kind = "image";
    return qa;
}

std::string option_image_label(std::size_t i) { return "Option image " + std::to_string(i + 1); }

// Shuffles candidates (index 0 is correct) and returns the order plus the
// position the correct one landed in.
std::pair<std::vector<std::size_t>, int> shuffled_order(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    int correct = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] == 0) correct = static_cast<int>(i);
    }
    return {perm, correct};
}

void set_image_options(QAPair& qa, std::size_t n, int correct) {
    qa.format = Format::MultiChoice;
    qa.options.options.clear();
    for (std::size_t i = 0; i < n; ++i) qa.options.options.push_back(option_image_label(i));
    qa.options.correct = correct;
    qa.answer = std::string(1, qa.options.correct_letter());
    qa.truth = option_image_label(static_cast<std::size_t>(correct));
    qa.wrong.clear();
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) != correct) qa.wrong.push_back(option_image_label(i));
    }
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Serialization

json grid_to_json(const ColorGrid& g) {
    json rows = json::array();
    for (int r = 0; r < g.height; ++r) {
        json row = json::array();
        for (int c = 0; c < g.width; ++c) row.push_back(g.at(r, c));
        rows.push_back(row);
    }
    return {{"width", g.width}, {"height", g.height}, {"cells", rows}};
}

ColorGrid grid_from_json(const json& j) {
    ColorGrid g(j.at("width").get<int>(), j.at("height").get<int>());
    const auto& rows = j.at("cells");
    if (static_cast<int>(rows.size()) != g.height) throw ValidationError("grid row count mismatch");
    for (int r = 0; r < g.height; ++r) {
        if (static_cast<int>(rows[r].size()) != g.width) throw ValidationError("grid column count mismatch");
        for (int c = 0; c < g.width; ++c) g.at(r, c) = rows[r][c].get<int>();
    }
    return g;
}

json shape_to_json(const VoxelShape& s) {
    json out = json::array();
    for (const auto& v : s.voxels) out.push_back({v.x, v.y, v.z, v.color});
    return out;
}

VoxelShape shape_from_json(const json& j) {
    VoxelShape s;
    for (const auto& v : j) {
        if (!v.is_array() || v.size() != 4) throw ValidationError("voxel must be [x, y, z, color]");
        s.voxels.push_back({v[0].get<int>(), v[1].get<int>(), v[2].get<int>(), v[3].get<int>()});
    }
    return s;
}

// ---------------------------------------------------------------------------
// Rendering

Raster render_grid(const ColorGrid& g, int cell) {
    const int pad = 4;
    Raster img(g.width * cell + 2 * pad, g.height * cell + 2 * pad);
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            const int x0 = pad + c * cell;
            const int y0 = pad + r * cell;
            img.fill_rect(x0, y0, x0 + cell - 1, y0 + cell - 1, palette_color(g.at(r, c)));
            img.stroke_rect(x0, y0, x0 + cell - 1, y0 + cell - 1, {40, 40, 40});
        }
    }
    return img;
}

namespace {

Rgb shade(Rgb c, double f) {
    return {static_cast<std::uint8_t>(c[0] * f), static_cast<std::uint8_t>(c[1] * f),
            static_cast<std::uint8_t>(c[2] * f)};
}

}  // namespace

Raster render_voxels(const VoxelShape& shape, int unit) {
    const VoxelShape s = geometry::recenter(shape);
    int extent = 1;
    for (const auto& v : s.voxels) extent = std::max({extent, v.x + 1, v.y + 1, v.z + 1});
    const double cx = std::cos(std::numbers::pi / 6.0) * unit;
    const double sy = 0.5 * unit;
    const int w = static_cast<int>(2 * extent * cx) + 2 * unit;
    const int h = static_cast<int>(extent * (2 * sy + unit)) + 2 * unit;
    Raster img(w, h);
    const double ox = w / 2.0;
    const double oy = unit + extent * unit;  // screen y of the origin
    auto proj = [&](double x, double y, double z) -> std::array<double, 2> {
        return {ox + (x - y) * cx, oy + (x + y) * sy - z * unit - extent * sy};
    };
    std::vector<Voxel> order = s.voxels;
    std::sort(order.begin(), order.end(), [](const Voxel& a, const Voxel& b) {
        return std::tuple(a.x + a.y + a.z, a.z, a.x) < std::tuple(b.x + b.y + b.z, b.z, b.x);
    });
    const Rgb edge = {30, 30, 30};
    for (const auto& v : order) {
        const double x = v.x, y = v.y, z = v.z;
        const Rgb base = palette_color(v.color);
        const std::array<std::array<std::array<double, 3>, 4>, 3> faces = {{
            {{{x, y, z + 1}, {x + 1, y, z + 1}, {x + 1, y + 1, z + 1}, {x, y + 1, z + 1}}},
            {{{x + 1, y, z}, {x + 1, y + 1, z}, {x + 1, y + 1, z + 1}, {x + 1, y, z + 1}}},
            {{{x, y + 1, z}, {x + 1, y + 1, z}, {x + 1, y + 1, z + 1}, {x, y + 1, z + 1}}},
        }};
        const std::array<double, 3> factor = {1.0, 0.8, 0.6};
        for (std::size_t f = 0; f < faces.size(); ++f) {
            std::array<std::array<double, 2>, 4> pts;
            for (int k = 0; k < 4; ++k) pts[k] = proj(faces[f][k][0], faces[f][k][1], faces[f][k][2]);
            img.fill_polygon(pts, shade(base, factor[f]));
            for (int k = 0; k < 4; ++k) {
                const auto& a = pts[k];
                const auto& b = pts[(k + 1) % 4];
                img.draw_line(a[0], a[1], b[0], b[1], edge);
            }
        }
    }
    return img;
}

Raster render_map(const std::vector<MapObject>& objects, int grid, int cell) {
    Raster img(grid * cell, grid * cell);
    for (int i = 0; i <= grid; ++i) {
        const double p = std::min(i * cell, grid * cell - 1);
        img.draw_line(p, 0, p, grid * cell - 1, {225, 225, 225});
        img.draw_line(0, p, grid * cell - 1, p, {225, 225, 225});
    }
    img.draw_text(grid * cell / 2 - 3, 2, "N", {0, 0, 0}, 1);
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        const double px = o.x * cell + cell / 2.0;
        const double py = (grid - 1 - o.y) * cell + cell / 2.0;
        img.fill_circle(px, py, cell / 5.0, palette_color(static_cast<int>(i) + 1));
        img.draw_text(static_cast<int>(px) - 3 * static_cast<int>(o.name.size()), static_cast<int>(py) + cell / 5 + 2,
                      upper(o.name), {0, 0, 0}, 1);
    }
    return img;
}

// ---------------------------------------------------------------------------
// Spatial map

std::string_view to_string(MapSubtype s) {
    switch (s) {
        case MapSubtype::DirectionRelation: return "direction_relation";
        case MapSubtype::FindObject: return "find_object";
        case MapSubtype::CountObjects: return "count_objects";
        case MapSubtype::ClosestObject: return "closest_object";
    }
    return "?";
}

std::string compass_direction(int dx, int dy) {
    if (dx == 0 && dy == 0) throw DomainError("coincident points have no direction");
    if (dx == 0) return dy > 0 ? "north" : "south";
    if (dy == 0) return dx > 0 ? "east" : "west";
    return std::string(dy > 0 ? "north" : "south") + (dx > 0 ? "east" : "west");
}

namespace {

const std::vector<std::string>& place_names() {
    static const std::vector<std::string> kNames = {
        "Bank",  "Park",  "School", "Hospital", "Library", "Museum", "Cafe",    "Stadium",
        "Bakery", "Market", "Station", "Hotel", "Theater", "Zoo",    "Airport", "Harbor",
    };
    return kNames;
}

std::vector<MapObject> place_objects(Rng& rng, int n, int grid) {
    std::vector<std::string> names = place_names();
    rng.shuffle(std::span<std::string>(names));
    std::vector<MapObject> out;
    for (int guard = 0; static_cast<int>(out.size()) < n; ++guard) {
        if (guard > 10000) throw GenerationError("could not place map objects");
        MapObject o{names[out.size()], rng.uniform_int(0, grid - 1), rng.uniform_int(0, grid - 1)};
        bool clear = true;
        for (const auto& p : out) {
            // At least two cells apart so markers and labels do not overlap.
            clear = clear && std::max(std::abs(p.x - o.x), std::abs(p.y - o.y)) >= 2;
        }
        if (clear) out.push_back(o);
    }
    return out;
}

std::string dir_of(const MapObject& a, const MapObject& anchor) {
    return compass_direction(a.x - anchor.x, a.y - anchor.y);
}

}  // namespace

SimItem sim_spatial_map(Rng& rng, const SpatialMapOptions& opts) {
    if (opts.n_objects < 3) throw DomainError("spatial map needs at least 3 objects");
    if (opts.n_objects > static_cast<int>(place_names().size()) ||
        opts.n_objects > ((opts.grid + 1) / 2) * ((opts.grid + 1) / 2)) {
        throw DomainError("too many objects for the map");
    }
    const std::pair<std::string_view, std::string> rule{"DIRECTION_RULE", std::string(kDirectionRule)};

    for (int attempt = 0; attempt < kRetryBound; ++attempt) {
        const auto objs = place_objects(rng, opts.n_objects, opts.grid);
        const MapSubtype sub = opts.subtype ? *opts.subtype : static_cast<MapSubtype>(rng.index(4));
        const auto t = choose_template(Task::SpatialMap, rng, to_string(sub));
        QAPair qa = base_pair(Task::SpatialMap, rng, t);
        json query;
        std::vector<std::string> wrong;
        const int n = static_cast<int>(objs.size());

        if (sub == MapSubtype::DirectionRelation) {
            const std::size_t i = rng.index(objs.size());
            std::size_t j = rng.index(objs.size() - 1);
            if (j >= i) ++j;
            qa.question = fill(t.text, std::vector<std::pair<std::string_view, std::string>>{
                                           {"q1_p1", objs[i].name}, {"q1_p2", objs[j].name}, rule});
            qa.truth = dir_of(objs[i], objs[j]);
            std::vector<std::string> others;
            for (const char* d : kCompass) {
                if (d != qa.truth) others.push_back(d);
            }
            rng.shuffle(std::span<std::string>(others));
            wrong.assign(others.begin(), others.begin() + 3);
            query = {{"p1", objs[i].name}, {"p2", objs[j].name}};
        } else if (sub == MapSubtype::FindObject) {
            const std::size_t i = rng.index(objs.size());
            std::map<std::string, std::vector<std::size_t>> by_dir;
            for (std::size_t k = 0; k < objs.size(); ++k) {
                if (k != i) by_dir[dir_of(objs[k], objs[i])].push_back(k);
            }
            std::vector<std::string> singles;
            for (const auto& [d, ks] : by_dir) {
                if (ks.size() == 1) singles.push_back(d);
            }
            if (singles.empty()) continue;
            const std::string target = singles[rng.index(singles.size())];
            const std::size_t ans = by_dir[target][0];
            std::vector<std::string> others;
            for (std::size_t k = 0; k < objs.size(); ++k) {
                if (k != i && k != ans) others.push_back(objs[k].name);
            }
            if (others.size() < 3) continue;
            rng.shuffle(std::span<std::string>(others));
            wrong.assign(others.begin(), others.begin() + 3);
            qa.truth = objs[ans].name;
            qa.question = fill(t.text, std::vector<std::pair<std::string_view, std::string>>{
                                           {"target_dir", target}, {"q2_p1", objs[i].name}, rule});
            query = {{"p1", objs[i].name}, {"direction", target}};
        } else if (sub == MapSubtype::CountObjects) {
            if (n < 4) continue;
            const std::size_t i = rng.index(objs.size());
            const std::string target = kCompass[rng.index(8)];
            int count = 0;
            for (std::size_t k = 0; k < objs.size(); ++k) {
                if (k != i && dir_of(objs[k], objs[i]) == target) ++count;
            }
            std::vector<std::string> others;
            for (int c = 0; c <= n - 1; ++c) {
                if (c != count) others.push_back(std::to_string(c));
            }
            rng.shuffle(std::span<std::string>(others));
            wrong.assign(others.begin(), others.begin() + 3);
            qa.truth = std::to_string(count);
            qa.question = fill(t.text, std::vector<std::pair<std::string_view, std::string>>{
                                           {"q3_target_dir", target}, {"q3_p1", objs[i].name}, rule});
            query = {{"p1", objs[i].name}, {"direction", target}};
        } else {
            const std::size_t i = rng.index(objs.size());
            std::vector<std::pair<long, std::size_t>> d2;
            for (std::size_t k = 0; k < objs.size(); ++k) {
                if (k == i) continue;
                const long dx = objs[k].x - objs[i].x;
                const long dy = objs[k].y - objs[i].y;
                d2.push_back({dx * dx + dy * dy, k});
            }
            std::sort(d2.begin(), d2.end());
            if (d2[0].first == d2[1].first) continue;  // tie: no single answer
            std::vector<std::string> others;
            for (std::size_t k = 1; k < d2.size(); ++k) others.push_back(objs[d2[k].second].name);
            if (others.size() < 3) continue;
            rng.shuffle(std::span<std::string>(others));
            wrong.assign(others.begin(), others.begin() + 3);
            qa.truth = objs[d2[0].second].name;
            qa.question = fill(t.text, std::vector<std::pair<std::string_view, std::string>>{{"q4_p1", objs[i].name}});
            query = {{"p1", objs[i].name}};
        }

        qa.wrong = wrong;
        QAPair mc = to_multiple_choice(qa, wrong, rng);
        mc.media = {"map.png"};
        SimItem item;
        item.qa = std::move(mc);
        item.images.push_back({"map", render_map(objs, opts.grid)});
        json objects = json::array();
        for (const auto& o : objs) objects.push_back({{"name", o.name}, {"x", o.x}, {"y", o.y}});
        item.sidecar = {{"kind", "spatial_map"},
                        {"subtype", std::string(to_string(sub))},
                        {"grid", opts.grid},
                        {"objects", objects},
                        {"query", query},
                        {"answer_text", item.qa.truth}};
        item.qa.meta["subtype"] = std::string(to_string(sub));
        return item;
    }
    throw GenerationError("spatial map generation exceeded its retry bound");
}

// ---------------------------------------------------------------------------
// 2D rotation

SimItem sim_rotation2d(Rng& rng) {
    ColorGrid ref;
    bool found = false;
    for (int attempt = 0; attempt < kRetryBound && !found; ++attempt) {
        const int n = rng.uniform_int(3, 4);
        ref = ColorGrid(n, n);
        for (auto& c : ref.cells) c = rng.uniform_int(1, 4);
        std::set<int> colors(ref.cells.begin(), ref.cells.end());
        found = colors.size() >= 3 && geometry::grid_is_asymmetric(ref);
    }
    if (!found) throw GenerationError("could not draw an asymmetric grid");

    const int k = rng.uniform_int(1, 3);
    const ColorGrid correct = geometry::grid_rotate(ref, k);
    std::vector<ColorGrid> cands = {correct};
    std::vector<std::string> kinds = {"rotation"};
    for (int guard = 0; cands.size() < 4; ++guard) {
        if (guard > kRetryBound) throw GenerationError("could not build rotation distractors");
        ColorGrid d = ref;
        std::string kind;
        switch (rng.index(3)) {
            case 0:
                d = geometry::grid_flip(ref, rng.bernoulli(0.5) ? geometry::FlipAxis::Horizontal
                                                                : geometry::FlipAxis::Vertical);
                kind = "flip";
                break;
            case 1: {
                auto& cell = d.cells[rng.index(d.cells.size())];
                const int old = cell;
                cell = rng.uniform_int(1, 5);
                if (cell == old) cell = old % 5 + 1;
                kind = "color_shift";
                break;
            }
            default: {
                // Swap two colors everywhere.
                const std::set<int> present(ref.cells.begin(), ref.cells.end());
                const std::vector<int> colors(present.begin(), present.end());
                const int a = colors[rng.index(colors.size())];
                int b = colors[rng.index(colors.size())];
                if (a == b) continue;
                for (auto& c : d.cells) c = c == a ? b : (c == b ? a : c);
                kind = "color_swap";
                break;
            }
        }
        d = geometry::grid_rotate(d, rng.uniform_int(0, 3));
        if (geometry::grid_rotation_equivalent(ref, d)) continue;
        if (std::find(cands.begin(), cands.end(), d) != cands.end()) continue;
        cands.push_back(d);
        kinds.push_back(kind);
    }

    const auto t = choose_template(Task::Rotation2D, rng);
    QAPair qa = base_pair(Task::Rotation2D, rng, t);
    qa.question = std::string(t.text);
    const auto [perm, correct_pos] = shuffled_order(cands.size(), rng);
    set_image_options(qa, cands.size(), correct_pos);

    SimItem item;
    item.images.push_back({"reference", render_grid(ref)});
    qa.media.push_back("reference.png");
    json opts = json::array();
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto& g = cands[perm[i]];
        const std::string name = "option_" + std::to_string(i + 1);
        item.images.push_back({name, render_grid(g)});
        qa.media.push_back(name + ".png");
        opts.push_back({{"grid", grid_to_json(g)}, {"kind", kinds[perm[i]]}});
    }
    qa.meta["quarter_turns"] = k;
    item.qa = std::move(qa);
    item.sidecar = {{"kind", "rotation2d"},
                    {"reference", grid_to_json(ref)},
                    {"options", opts},
                    {"quarter_turns_clockwise", k},
                    {"correct_index", correct_pos}};
    return item;
}

// ---------------------------------------------------------------------------
// 3D rotation

namespace {

const std::array<std::array<int, 3>, 6> kNeighbors = {{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

bool occupied(const VoxelShape& s, int x, int y, int z) {
    return std::any_of(s.voxels.begin(), s.voxels.end(),
                       [&](const Voxel& v) { return v.x == x && v.y == y && v.z == z; });
}

// Empty lattice cells face-adjacent to the shape, within [0, bound).
std::vector<std::array<int, 3>> frontier(const VoxelShape& s, int bound) {
    std::set<std::array<int, 3>> out;
    for (const auto& v : s.voxels) {
        for (const auto& d : kNeighbors) {
            const int x = v.x + d[0], y = v.y + d[1], z = v.z + d[2];
            if (x < 0 || y < 0 || z < 0 || x >= bound || y >= bound || z >= bound) continue;
            if (!occupied(s, x, y, z)) out.insert({x, y, z});
        }
    }
    return {out.begin(), out.end()};
}

bool connected(const VoxelShape& s) {
    if (s.voxels.empty()) return false;
    std::vector<bool> seen(s.voxels.size(), false);
    std::vector<std::size_t> stack = {0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < s.voxels.size(); ++j) {
            if (seen[j]) continue;
            const auto& a = s.voxels[i];
            const auto& b = s.voxels[j];
            if (std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z) == 1) {
                seen[j] = true;
                ++count;
                stack.push_back(j);
            }
        }
    }
    return count == s.voxels.size();
}

VoxelShape grow_shape(Rng& rng, int n, int bound, int colors) {
    VoxelShape s;
    s.voxels.push_back({rng.uniform_int(0, bound - 1), rng.uniform_int(0, bound - 1), rng.uniform_int(0, bound - 1),
                        rng.uniform_int(1, colors)});
    while (static_cast<int>(s.voxels.size()) < n) {
        const auto f = frontier(s, bound);
        if (f.empty()) break;
        const auto& p = f[rng.index(f.size())];
        s.voxels.push_back({p[0], p[1], p[2], rng.uniform_int(1, colors)});
    }
    return s;
}

VoxelShape random_pose(const VoxelShape& s, Rng& rng) {
    const auto& rots = geometry::cube_rotation_matrices();
    return geometry::recenter(geometry::rotate_shape(s, rots[rng.index(rots.size())]));
}

}  // namespace

SimItem sim_rotation3d(Rng& rng) {
    VoxelShape ref;
    bool found = false;
    for (int attempt = 0; attempt < kRetryBound && !found; ++attempt) {
        ref = grow_shape(rng, rng.uniform_int(4, 6), 3, 3);
        found = ref.voxels.size() >= 4 && !geometry::voxel_self_symmetric(ref);
    }
    if (!found) throw GenerationError("could not grow an asymmetric voxel shape");
    ref = geometry::recenter(ref);

    const auto& rots = geometry::cube_rotation_matrices();
    const std::size_t rot_index = 1 + rng.index(rots.size() - 1);
    const VoxelShape correct = geometry::recenter(geometry::rotate_shape(ref, rots[rot_index]));

    std::vector<VoxelShape> cands = {correct};
    std::vector<std::string> kinds = {"rotation"};
    std::vector<std::string> plan = {"count", "color", "layout"};
    rng.shuffle(std::span<std::string>(plan));
    for (int guard = 0; cands.size() < 4; ++guard) {
        if (guard > kRetryBound) throw GenerationError("could not build 3D rotation distractors");
        const std::string kind = plan[(cands.size() - 1) % plan.size()];
        VoxelShape d = ref;
        if (kind == "count") {
            if (d.voxels.size() > 4 && rng.bernoulli(0.5)) {
                d.voxels.erase(d.voxels.begin() + static_cast<std::ptrdiff_t>(rng.index(d.voxels.size())));
                if (!connected(d)) continue;
            } else {
                const auto f = frontier(d, 4);
                if (f.empty()) continue;
                const auto& p = f[rng.index(f.size())];
                d.voxels.push_back({p[0], p[1], p[2], rng.uniform_int(1, 3)});
            }
        } else if (kind == "color") {
            auto& v = d.voxels[rng.index(d.voxels.size())];
            v.color = v.color % 3 + 1 + static_cast<int>(rng.index(2)) % 2;
            if (v.color > 3) v.color = 1;
        } else {
            // Move one voxel elsewhere on the surface: same count, same colors.
            const std::size_t i = rng.index(d.voxels.size());
            const Voxel moved = d.voxels[i];
            d.voxels.erase(d.voxels.begin() + static_cast<std::ptrdiff_t>(i));
            if (!connected(d)) continue;
            const auto f = frontier(d, 4);
            const auto& p = f[rng.index(f.size())];
            if (p[0] == moved.x && p[1] == moved.y && p[2] == moved.z) continue;
            d.voxels.push_back({p[0], p[1], p[2], moved.color});
        }
        d = random_pose(d, rng);
        if (geometry::voxel_equivalent(ref, d)) continue;
        bool dup = false;
        for (const auto& c : cands) dup = dup || geometry::recenter(c).voxels == d.voxels;
        if (dup) continue;
        cands.push_back(d);
        kinds.push_back(kind);
    }

    const auto t = choose_template(Task::Rotation3D, rng);
    QAPair qa = base_pair(Task::Rotation3D, rng, t);
    qa.question = std::string(t.text);
    const auto [perm, correct_pos] = shuffled_order(cands.size(), rng);
    set_image_options(qa, cands.size(), correct_pos);

    SimItem item;
    item.images.push_back({"reference", render_voxels(ref)});
    qa.media.push_back("reference.png");
    json opts = json::array();
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const std::string name = "option_" + std::to_string(i + 1);
        item.images.push_back({name, render_voxels(cands[perm[i]])});
        qa.media.push_back(name + ".png");
        opts.push_back({{"voxels", shape_to_json(cands[perm[i]])}, {"kind", kinds[perm[i]]}});
    }
    item.qa = std::move(qa);
    item.sidecar = {{"kind", "rotation3d"},
                    {"reference", shape_to_json(ref)},
                    {"options", opts},
                    {"rotation_index", rot_index},
                    {"correct_index", correct_pos}};
    return item;
}

// ---------------------------------------------------------------------------
// Multi-view projection

std::string_view to_string(ViewKind v) {
    switch (v) {
        case ViewKind::Front: return "front";
        case ViewKind::Left: return "left";
        case ViewKind::Top: return "top";
        case ViewKind::Bottom: return "bottom";
    }
    return "?";
}

ColorGrid project_view(const VoxelShape& s, ViewKind v, int n) {
    ColorGrid g(n, n, 0);
    for (const auto& p : s.voxels) {
        if (p.x < 0 || p.y < 0 || p.z < 0 || p.x >= n || p.y >= n || p.z >= n) {
            throw ShapeError("voxel outside the projection cube");
        }
        int r = 0, c = 0;
        switch (v) {
            case ViewKind::Front: r = n - 1 - p.z; c = n - 1 - p.x; break;
            case ViewKind::Left: r = n - 1 - p.z; c = p.y; break;
            case ViewKind::Top: r = n - 1 - p.y; c = p.x; break;
            case ViewKind::Bottom: r = n - 1 - p.y; c = n - 1 - p.x; break;
        }
        g.at(r, c) = 1;
    }
    return g;
}

SimItem sim_multiview(Rng& rng, std::optional<MultiViewSubtype> subtype) {
    constexpr int n = 3;
    constexpr std::array<ViewKind, 3> kMain = {ViewKind::Front, ViewKind::Left, ViewKind::Top};
    const std::pair<std::string_view, std::string> rule{"VIEW_RULE", std::string(kViewRule)};

    for (int attempt = 0; attempt < kRetryBound; ++attempt) {
        const VoxelShape scene = grow_shape(rng, rng.uniform_int(4, 8), n, 4);
        std::array<ColorGrid, 4> views;
        for (int v = 0; v < 4; ++v) views[v] = project_view(scene, static_cast<ViewKind>(v), n);
        if (views[0] == views[1] || views[0] == views[2] || views[1] == views[2]) continue;

        const auto sub = subtype ? *subtype : static_cast<MultiViewSubtype>(rng.index(2));
        SimItem item;
        item.images.push_back({"scene", render_voxels(scene)});
        json sidecar = {{"kind", "multiview"}, {"scene", shape_to_json(scene)}, {"size", n}};
        json jviews = json::object();
        for (int v = 0; v < 4; ++v) jviews[std::string(to_string(static_cast<ViewKind>(v)))] = grid_to_json(views[v]);
        sidecar["views"] = jviews;

        if (sub == MultiViewSubtype::ViewIdentification) {
            const auto shown = static_cast<ViewKind>(rng.index(3));
            const auto& g = views[static_cast<int>(shown)];
            // The shown silhouette must not also be a valid answer for another label.
            bool ambiguous = false;
            for (int v = 0; v < 4; ++v) ambiguous = ambiguous || (v != static_cast<int>(shown) && views[v] == g);
            if (ambiguous) continue;
            const auto t = choose_template(Task::MultiView, rng, "view_identification");
            QAPair qa = base_pair(Task::MultiView, rng, t);
            qa.question = fill(t.text, std::vector<std::pair<std::string_view, std::string>>{rule});
            auto label = [](ViewKind v) {
                std::string s(to_string(v));
                s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
                return s + " view";
            };
            qa.truth = label(shown);
            for (int v = 0; v < 4; ++v) {
                if (v != static_cast<int>(shown)) qa.wrong.push_back(label(static_cast<ViewKind>(v)));
            }
            QAPair mc = to_multiple_choice(qa, qa.wrong, rng);
            mc.media = {"scene.png", "view.png"};
            mc.meta["subtype"] = "view_identification";
            item.images.push_back({"view", render_grid(g)});
            item.qa = std::move(mc);
            sidecar["subtype"] = "view_identification";
            sidecar["shown_view"] = std::string(to_string(shown));
            item.sidecar = std::move(sidecar);
            return item;
        }

        const int target = static_cast<int>(rng.index(3));
        std::vector<ColorGrid> cands = {views[target]};
        std::vector<std::string> kinds = {std::string(to_string(kMain[target]))};
        for (int v = 0; v < 3; ++v) {
            if (v != target) {
                cands.push_back(views[v]);
                kinds.push_back(std::string(to_string(kMain[v])));
            }
        }
        // Fourth option: the target silhouette with one cell toggled.
        bool ok = false;
        for (int guard = 0; guard < 50 && !ok; ++guard) {
            ColorGrid d = views[target];
            auto& c = d.cells[rng.index(d.cells.size())];
            c = c ? 0 : 1;
            const bool empty = std::all_of(d.cells.begin(), d.cells.end(), [](int x) { return x == 0; });
            if (empty || std::find(cands.begin(), cands.end(), d) != cands.end()) continue;
            cands.push_back(d);
            kinds.push_back("perturbed");
            ok = true;
        }
        if (!ok) continue;
        const auto t = choose_template(Task::MultiView, rng, "view_matching");
        QAPair qa = base_pair(Task::MultiView, rng, t);
        qa.question = fill(t.text, std::vector<std::pair<std::string_view, std::string>>{
                                       {"target_view", std::string(to_string(kMain[target]))}, rule});
        const auto [perm, correct_pos] = shuffled_order(cands.size(), rng);
        set_image_options(qa, cands.size(), correct_pos);
        qa.media.push_back("scene.png");
        json opts = json::array();
        for (std::size_t i = 0; i < perm.size(); ++i) {
            const std::string name = "option_" + std::to_string(i + 1);
            item.images.push_back({name, render_grid(cands[perm[i]])});
            qa.media.push_back(name + ".png");
            opts.push_back({{"grid", grid_to_json(cands[perm[i]])}, {"kind", kinds[perm[i]]}});
        }
        qa.meta["subtype"] = "view_matching";
        item.qa = std::move(qa);
        sidecar["subtype"] = "view_matching";
        sidecar["target_view"] = std::string(to_string(kMain[target]));
        sidecar["options"] = opts;
        sidecar["correct_index"] = correct_pos;
        item.sidecar = std::move(sidecar);
        return item;
    }
    throw GenerationError("multi-view generation exceeded its retry bound");
}

SimItem simulate(Task task, Rng& rng) {
    switch (task) {
        case Task::SpatialMap: return sim_spatial_map(rng);
        case Task::MultiView: return sim_multiview(rng);
        case Task::Rotation2D: return sim_rotation2d(rng);
        case Task::Rotation3D: return sim_rotation3d(rng);
        default: throw UnsupportedTaskError(std::string(to_string(task)) + " is not a simulator task");
    }
}

}  // namespace spatialqa::qagen
