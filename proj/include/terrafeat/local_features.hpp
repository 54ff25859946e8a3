#pragma once

#include "terrafeat/neighbor_index.hpp"
#include "terrafeat/point_cloud.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace terrafeat {

inline constexpr const char* kPlanarity = "planarity";
inline constexpr const char* kNormalZ = "normal_z";
inline constexpr const char* kLinearity = "linearity";
inline constexpr const char* kOmnivariance = "omnivariance";

/// Eigen-decomposition of a neighbourhood's covariance (about its centroid,
/// divided by the neighbour count).
struct StructureTensor {
    std::array<double, 3> eigenvalues{}; ///< descending, clamped at 0
    std::array<double, 3> minor_axis{};  ///< unit eigenvector of the smallest eigenvalue
};

StructureTensor structure_tensor(std::span<const Point3> points, std::span<const Neighbor> neighbors);

/// Per-point shape descriptors. Eigenvalues come from the small
/// (planarity) neighbourhood, normal_z from the large one.
struct LocalFeatureSet {
    std::vector<std::array<double, 3>> eigenvalues;
    std::vector<double> planarity;    ///< (l2 - l3) / l1
    std::vector<double> normal_z;     ///< |z| of the minor eigenvector, in [0, 1]
    std::vector<double> linearity;    ///< (l1 - l2) / l1
    std::vector<double> omnivariance; ///< cbrt(l1 l2 l3)

    std::size_t size() const noexcept { return planarity.size(); }
};

/// Neighbourhoods with l1 <= this are treated as a single location:
/// planarity 0, normal_z 1, linearity 0, omnivariance 0.
inline constexpr double kDegenerateEigenvalue = 1e-12;

/**
 * Computes features for every point. Each point counts as its own nearest
 * neighbour (distance 0), so k = 10 means the point and its 9 closest
 * others. Throws std::invalid_argument for clouds of fewer than 3 points or
 * k < 3.
 */
LocalFeatureSet structure_tensor_features(const PointCloud& cloud, const NeighborIndex& index,
                                          std::size_t k_planarity = 10, std::size_t k_normal = 100);

/// Adds "planarity" and "normal_z", plus "linearity" and "omnivariance"
/// when `include_extras` is set.
PointCloud append_local_features(PointCloud cloud, const LocalFeatureSet& features, bool include_extras = false);

} // namespace terrafeat
