#pragma once

#include "terrafeat/point_cloud.hpp"
#include "terrafeat/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace terrafeat {

// ---------------------------------------------------------------------------
// Ground candidates

/// DSM cells whose value is within `tol` of the minimum over a circular
/// window, reported as cell-center samples carrying the DSM value.
struct GroundCandidates {
    RasterGeometry geometry;
    std::vector<std::size_t> cells; ///< linear cell ids, ascending
    std::vector<Point3> samples;    ///< one per cell: (center_x, center_y, dsm)

    std::size_t count() const noexcept { return samples.size(); }
    /// 0/1 raster over `geometry`, 1 at candidate cells.
    RasterGrid mask() const;
};

/**
 * Applies a circular minimum filter of radius `radius` (cells whose center
 * offset is at most `radius`) and flags cells with dsm <= window_min + tol.
 * Cells where `mask` holds a nonzero value are never flagged but still take
 * part in the window minimum.
 *
 * Throws std::invalid_argument when radius < dsm cell, the DSM still has
 * nodata, or the mask geometry differs; NumericalError when nothing is
 * flagged.
 */
GroundCandidates extract_ground_candidates(const RasterGrid& dsm, double radius, double tol,
                                           const RasterGrid* mask = nullptr);

/// Circular-window minimum of every cell (the filter used above).
RasterGrid circular_min_filter(const RasterGrid& raster, double radius);

// ---------------------------------------------------------------------------
// Robust spline DTM

enum class DataTerm {
    l1, ///< absolute residuals (the robust fit)
    l2  ///< squared residuals; kept for comparisons against the robust fit
};

struct SplineConfig {
    double lambda = 0.7;     ///< smoothness weight, data weight is 1 - lambda
    double epsilon = 1e-3;   ///< weight of the first-derivative penalty
    double node_cell = 0.0;  ///< node spacing in meters; 0 means 4 x raster cell
    std::size_t irls_iters = 20;
    double irls_delta = 1e-3; ///< |t| is smoothed as sqrt(t^2 + delta^2)
    double cg_tol = 1e-6;     ///< relative residual of each inner solve
    std::size_t cg_max_iter = 2000;
    DataTerm data_term = DataTerm::l1;
    /// Initialise the fine solve from fits on successively coarser node
    /// grids (spacing doubled per level, data thinned accordingly).
    bool multilevel_init = true;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/**
 * Surface defined by values on a regular node grid and evaluated with
 * Catmull-Rom bicubic interpolation. The grid carries one padding node
 * below and at least two above the covered domain in each axis.
 */
struct NodeSurface {
    double x0 = 0.0; ///< position of node (0, 0)
    double y0 = 0.0;
    double spacing = 1.0;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> values; ///< row-major, nx * ny

    double evaluate(double x, double y) const;
};

struct SplineFitResult {
    RasterGrid dtm;
    NodeSurface surface;
    /// Smoothed objective at the initial iterate and after every IRLS step
    /// of the finest level.
    std::vector<double> objective;
    std::size_t cg_iterations = 0;
    bool cg_converged = true;
};

/**
 * Minimises
 *   (1-lambda) sum_m |z(x_m,y_m) - z_m|
 *   + lambda * area * sum_nodes (|z_xx| + 2|z_xy| + |z_yy|)
 *   + epsilon * sum_nodes (|z_x| + |z_y|)
 * over node values (central differences on the node grid), with every |t|
 * smoothed to sqrt(t^2 + delta^2). Each IRLS step solves the reweighted
 * normal equations by Jacobi-preconditioned conjugate gradients started
 * from the current iterate, so the objective never increases.
 *
 * Throws std::invalid_argument for fewer than 3 samples and NumericalError
 * for a collinear sample footprint. Inner solves that miss cg_tol are
 * reported through cg_converged and a warning.
 */
SplineFitResult fit_dtm_spline_detailed(const GroundCandidates& candidates, const RasterGeometry& domain,
                                        const SplineConfig& config);

RasterGrid fit_dtm_spline(const GroundCandidates& candidates, const RasterGeometry& domain,
                          const SplineConfig& config);

/// Smoothed objective of a surface against samples, as minimised above.
double spline_objective(const NodeSurface& surface, const std::vector<Point3>& samples,
                        const SplineConfig& config);

// ---------------------------------------------------------------------------
// RANSAC plane

/// z = a*x + b*y + c
struct Plane {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    std::size_t inlier_count = 0;
    double inlier_threshold = 0.0;

    double height(double x, double y) const noexcept { return a * x + b * y + c; }
};

/**
 * Best of `iterations` three-point hypotheses by inlier count
 * (|z - plane| <= threshold), refitted by least squares on its inliers.
 * Triples spanning less than 1e-6 m^2 are redrawn; hypotheses with
 * |normal_z| < 0.5 are discarded. The same seed gives the same plane.
 */
Plane ransac_ground_plane(const PointCloud& cloud, double inlier_threshold, std::size_t iterations,
                          std::uint64_t seed);

/// Plane evaluated at every cell center of `geometry`.
RasterGrid plane_raster(const Plane& plane, const RasterGeometry& geometry);

// ---------------------------------------------------------------------------
// Relative elevation

enum class RelzMode {
    cell,    ///< DTM value of the point's own cell
    bilinear ///< bilinear interpolation between the four nearest cell centers
};

/// z - DTM per point. Points outside the DTM use the nearest edge cell and
/// are counted in `clamped` (and a warning).
std::vector<float> relative_elevation_column(const PointCloud& cloud, const RasterGrid& dtm, RelzMode mode,
                                             std::size_t* clamped = nullptr);

/// Appends feature "h_r".
PointCloud relative_elevation(PointCloud cloud, const RasterGrid& dtm, RelzMode mode = RelzMode::cell);

/// Appends "h_r" = z - (a*x + b*y + c).
PointCloud relative_elevation_plane(PointCloud cloud, const Plane& plane);

/// Cellwise dsm - dtm; nodata wherever either input is nodata.
RasterGrid ndsm(const RasterGrid& dsm, const RasterGrid& dtm);

inline constexpr const char* kRelativeElevation = "h_r";

} // namespace terrafeat
