#include "spatialqa/geometry/symmetry.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "spatialqa/common/errors.hpp"

namespace spatialqa::geometry {

ColorGrid::ColorGrid(int w, int h, int fill)
    : width(w), height(h), cells(static_cast<std::size_t>(w) * h, fill) {}

namespace {

void require_square(const ColorGrid& g) {
    if (g.width != g.height || g.width <= 0) {
        throw ShapeError("grid must be square and nonempty");
    }
    if (g.cells.size() != static_cast<std::size_t>(g.width) * g.height) {
        throw ShapeError("grid cell count does not match its dimensions");
    }
}

}  // namespace

ColorGrid grid_rotate(const ColorGrid& g, int quarter_turns) {
    require_square(g);
    const int n = g.width;
    ColorGrid cur = g;
    const int k = ((quarter_turns % 4) + 4) % 4;
    for (int t = 0; t < k; ++t) {
        ColorGrid next(n, n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                // Clockwise: old (r, c) -> new (c, n-1-r).
                next.at(c, n - 1 - r) = cur.at(r, c);
            }
        }
        cur = std::move(next);
    }
    return cur;
}

ColorGrid grid_flip(const ColorGrid& g, FlipAxis axis) {
    if (g.cells.size() != static_cast<std::size_t>(g.width) * g.height) {
        throw ShapeError("grid cell count does not match its dimensions");
    }
    ColorGrid out(g.width, g.height);
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (axis == FlipAxis::Horizontal) {
                out.at(r, g.width - 1 - c) = g.at(r, c);
            } else {
                out.at(g.height - 1 - r, c) = g.at(r, c);
            }
        }
    }
    return out;
}

std::array<ColorGrid, 8> grid_dihedral_images(const ColorGrid& g) {
    require_square(g);
    std::array<ColorGrid, 8> out;
    const ColorGrid f = grid_flip(g, FlipAxis::Horizontal);
    for (int k = 0; k < 4; ++k) {
        out[k] = grid_rotate(g, k);
        out[4 + k] = grid_rotate(f, k);
    }
    return out;
}

bool grid_is_asymmetric(const ColorGrid& g) {
    const auto images = grid_dihedral_images(g);
    for (std::size_t i = 1; i < images.size(); ++i) {
        if (images[i] == g) return false;
    }
    return true;
}

bool grid_rotation_equivalent(const ColorGrid& a, const ColorGrid& b) {
    if (a.width != b.width || a.height != b.height) return false;
    for (int k = 0; k < 4; ++k) {
        if (grid_rotate(a, k) == b) return true;
    }
    return false;
}

const std::vector<IntRotation>& cube_rotation_matrices() {
    static const std::vector<IntRotation> kRotations = [] {
        std::vector<IntRotation> out;
        std::array<int, 3> perm = {0, 1, 2};
        do {
            for (int signs = 0; signs < 8; ++signs) {
                IntRotation m = IntRotation::Zero();
                for (int r = 0; r < 3; ++r) {
                    m(r, perm[r]) = (signs >> r) & 1 ? -1 : 1;
                }
                if (m.determinant() == 1) out.push_back(m);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        // Identity comes first: perm {0,1,2} with all-positive signs.
        return out;
    }();
    return kRotations;
}

std::vector<RotationMatrix> cube_rotations() {
    std::vector<RotationMatrix> out;
    for (const auto& m : cube_rotation_matrices()) {
        out.emplace_back(m.cast<double>().eval());
    }
    return out;
}

void VoxelShape::validate() const {
    if (voxels.empty()) throw ValidationError("voxel shape is empty");
    std::set<std::tuple<int, int, int>> seen;
    for (const auto& v : voxels) {
        if (!seen.emplace(v.x, v.y, v.z).second) {
            throw ValidationError("voxel shape has duplicate coordinates");
        }
    }
}

VoxelShape rotate_shape(const VoxelShape& s, const IntRotation& r) {
    VoxelShape out;
    out.voxels.reserve(s.voxels.size());
    for (const auto& v : s.voxels) {
        const Eigen::Vector3i p = r * Eigen::Vector3i(v.x, v.y, v.z);
        out.voxels.push_back({p.x(), p.y(), p.z(), v.color});
    }
    return out;
}

VoxelShape recenter(const VoxelShape& s) {
    VoxelShape out = s;
    if (out.voxels.empty()) return out;
    int mx = out.voxels[0].x, my = out.voxels[0].y, mz = out.voxels[0].z;
    for (const auto& v : out.voxels) {
        mx = std::min(mx, v.x);
        my = std::min(my, v.y);
        mz = std::min(mz, v.z);
    }
    for (auto& v : out.voxels) {
        v.x -= mx;
        v.y -= my;
        v.z -= mz;
    }
    std::sort(out.voxels.begin(), out.voxels.end());
    return out;
}

bool voxel_equivalent(const VoxelShape& a, const VoxelShape& b) {
    if (a.voxels.size() != b.voxels.size()) return false;
    const VoxelShape target = recenter(b);
    for (const auto& r : cube_rotation_matrices()) {
        if (recenter(rotate_shape(a, r)).voxels == target.voxels) return true;
    }
    return false;
}

bool voxel_self_symmetric(const VoxelShape& s) {
    const VoxelShape base = recenter(s);
    const auto& rots = cube_rotation_matrices();
    for (std::size_t i = 1; i < rots.size(); ++i) {
        if (recenter(rotate_shape(s, rots[i])).voxels == base.voxels) return true;
    }
    return false;
}

}  // namespace spatialqa::geometry
