#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spatialqa/common/raster.hpp"
#include "spatialqa/common/rng.hpp"
#include "spatialqa/geometry/symmetry.hpp"
#include "spatialqa/qagen/types.hpp"

namespace spatialqa::qagen {

struct NamedRaster {
    std::string name;  // file stem, e.g. "reference", "option_1"
    Raster image;
};

/// A simulator item: the question, its images in media order, and a
/// machine-readable description of what was drawn.
struct SimItem {
    QAPair qa;
    std::vector<NamedRaster> images;
    nlohmann::json sidecar;
};

// --- spatial map ------------------------------------------------------------

struct MapObject {
    std::string name;
    int x = 0;  // east
    int y = 0;  // north
};

enum class MapSubtype { DirectionRelation, FindObject, CountObjects, ClosestObject };
std::string_view to_string(MapSubtype s);

/// Direction of a point offset by (dx, dy) from the anchor: cardinal only when
/// one component is zero, diagonal otherwise. Throws DomainError on (0, 0).
std::string compass_direction(int dx, int dy);
inline constexpr const char* kCompass[] = {"north", "northeast", "east", "southeast",
                                           "south", "southwest", "west", "northwest"};

struct SpatialMapOptions {
    int n_objects = 6;
    int grid = 10;  // map is grid x grid cells
    std::optional<MapSubtype> subtype;
};

/// Throws DomainError if n_objects < 3 or does not fit the map.
SimItem sim_spatial_map(Rng& rng, const SpatialMapOptions& opts = {});

// --- 2D rotation ------------------------------------------------------------

SimItem sim_rotation2d(Rng& rng);

// --- 3D rotation ------------------------------------------------------------

SimItem sim_rotation3d(Rng& rng);

// --- multi-view projection --------------------------------------------------

enum class ViewKind { Front, Left, Top, Bottom };
std::string_view to_string(ViewKind v);

/// Orthographic silhouette of a shape inside an n-cube (coordinates 0..n-1).
/// Front looks from +Y (columns grow toward -X), left from +X (columns grow
/// toward +Y), top from +Z (columns grow toward +X, rows toward -Y); rows of
/// front/left views run from high Z to low Z. Bottom looks from -Z.
geometry::ColorGrid project_view(const geometry::VoxelShape& s, ViewKind v, int n);

enum class MultiViewSubtype { ViewIdentification, ViewMatching };

SimItem sim_multiview(Rng& rng, std::optional<MultiViewSubtype> subtype = std::nullopt);

// --- structure serialization (sidecars) --------------------------------------

nlohmann::json grid_to_json(const geometry::ColorGrid& g);
geometry::ColorGrid grid_from_json(const nlohmann::json& j);
nlohmann::json shape_to_json(const geometry::VoxelShape& s);
geometry::VoxelShape shape_from_json(const nlohmann::json& j);

/// Rendering helpers (exposed for the CLI and tests).
Raster render_grid(const geometry::ColorGrid& g, int cell = 40);
Raster render_voxels(const geometry::VoxelShape& s, int unit = 28);
Raster render_map(const std::vector<MapObject>& objects, int grid, int cell = 40);

/// Draws one item for the named simulator task.
SimItem simulate(Task task, Rng& rng);

}  // namespace spatialqa::qagen
