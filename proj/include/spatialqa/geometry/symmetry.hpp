#pragma once

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <vector>

#include "spatialqa/geometry/transform.hpp"

namespace spatialqa::geometry {

/// Colored grid, row-major. Cell values index a palette; 0 may be used as background.
struct ColorGrid {
    int width = 0;
    int height = 0;
    std::vector<int> cells;

    ColorGrid() = default;
    ColorGrid(int w, int h, int fill = 0);

    int at(int row, int col) const { return cells[static_cast<std::size_t>(row) * width + col]; }
    int& at(int row, int col) { return cells[static_cast<std::size_t>(row) * width + col]; }

    bool operator==(const ColorGrid&) const = default;
};

enum class FlipAxis { Horizontal, Vertical };  // mirror left-right, mirror top-bottom

/// Clockwise rotation by `quarter_turns` (any integer, taken mod 4). Square grids only.
ColorGrid grid_rotate(const ColorGrid& g, int quarter_turns);
ColorGrid grid_flip(const ColorGrid& g, FlipAxis axis);
/// The 8 dihedral images: rotations 0..3, then the horizontal flip rotated 0..3.
std::array<ColorGrid, 8> grid_dihedral_images(const ColorGrid& g);
/// True iff g differs from all 7 nontrivial dihedral images. Throws ShapeError if not square.
bool grid_is_asymmetric(const ColorGrid& g);
/// True iff some rotation (0..3 quarter turns) of `a` equals `b`.
bool grid_rotation_equivalent(const ColorGrid& a, const ColorGrid& b);

using IntRotation = Eigen::Matrix3i;

/// The 24 proper rotations of the cube (signed permutation matrices with det +1),
/// identity first.
const std::vector<IntRotation>& cube_rotation_matrices();
std::vector<RotationMatrix> cube_rotations();

struct Voxel {
    int x = 0;
    int y = 0;
    int z = 0;
    int color = 0;

    auto operator<=>(const Voxel&) const = default;
};

/// Set of colored unit cubes on the integer lattice.
struct VoxelShape {
    std::vector<Voxel> voxels;

    /// Throws ValidationError if empty or if coordinates repeat.
    void validate() const;
};

VoxelShape rotate_shape(const VoxelShape& s, const IntRotation& r);
/// Translate so the minimum corner is at the origin and sort voxels.
VoxelShape recenter(const VoxelShape& s);
/// True iff some cube rotation maps a onto b exactly (after recentering, colors matched).
bool voxel_equivalent(const VoxelShape& a, const VoxelShape& b);
/// True iff some non-identity cube rotation maps s onto itself.
bool voxel_self_symmetric(const VoxelShape& s);

}  // namespace spatialqa::geometry
