#pragma once

#include "terrafeat/point_cloud.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace terrafeat {

enum SceneClass : Label {
    kTerrainClass = 0,
    kRoadClass = 1,
    kBuildingClass = 2,
    kVegetationClass = 3,
};

struct TerrainSpec {
    enum class Kind { plane, sinusoid };
    Kind kind = Kind::plane;
    double base = 0.0;
    double slope_x = 0.0; ///< plane: z = base + slope_x x + slope_y y
    double slope_y = 0.0;
    double amplitude = 0.0; ///< sinusoid adds amplitude sin(2 pi x / P) cos(2 pi y / P)
    double period = 100.0;

    double height(double x, double y) const;
};

/// Flat-roofed block. The roof sits `height` above the terrain at the
/// footprint center.
struct BoxSpec {
    double x0 = 0, y0 = 0, x1 = 10, y1 = 10;
    double height = 8.0;
    Rgb roof_color{128, 128, 128};
    Rgb wall_color{180, 160, 140};
    Label label = kBuildingClass;

    bool covers(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

/// Spherical crown, sampled by volume.
struct TreeSpec {
    double cx = 0, cy = 0;
    double radius = 3.0;
    double center_height = 6.0; ///< crown center above terrain
    double density = 5.0;       ///< points per m^3
    Rgb color{60, 140, 50};
    Label label = kVegetationClass;
};

/// Straight strip on the terrain between two centerline points.
struct RoadSpec {
    double x0 = 0, y0 = 0, x1 = 100, y1 = 0;
    double width = 6.0;
    Rgb color{128, 128, 128};
    Label label = kRoadClass;

    bool covers(double x, double y) const;
};

struct SceneSpec {
    double xmin = 0, ymin = 0, xmax = 100, ymax = 100;
    TerrainSpec terrain;
    std::vector<BoxSpec> boxes;
    std::vector<TreeSpec> trees;
    std::vector<RoadSpec> roads;
    double density = 50.0;     ///< surface points per m^2 (terrain, roofs, walls)
    double noise = 0.03;       ///< Gaussian z noise, meters
    double color_noise = 6.0;  ///< Gaussian per-channel color noise
    Rgb terrain_color{110, 125, 70};
    Label terrain_label = kTerrainClass;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument for non-positive densities, negative
    /// heights or an empty extent.
    void validate() const;

    /// Terrain height without noise.
    double terrain_height(double x, double y) const { return terrain.height(x, y); }
    /// True when (x, y) lies inside a box footprint.
    bool under_box(double x, double y) const;
    double roof_height(const BoxSpec& box) const;
};

/**
 * Samples a labelled, colored cloud: terrain (points beneath boxes removed,
 * road strips relabelled), box roofs and walls, and tree crowns; Gaussian
 * z noise on everything. The expected terrain count is density times the
 * open area; the same spec gives the same cloud.
 */
PointCloud generate_scene(const SceneSpec& spec);

/// Parses the JSON scene description used by the synth command.
SceneSpec scene_from_json(const std::string& text);
std::string scene_to_json(const SceneSpec& spec);

/// Town with roads and flat roofs of identical color, trees and varied
/// building heights over gently rolling terrain.
SceneSpec town_scene(std::uint64_t seed, double size = 120.0, double density = 10.0);

/// 200 m x 200 m sinusoidal terrain (amplitude 2 m) with six blocks of up
/// to 12 m.
SceneSpec terrain_benchmark_scene(std::uint64_t seed, double density = 50.0);

} // namespace terrafeat
