#pragma once

#include "terrafeat/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace terrafeat {

/// Axis-aligned grid placement. Row 0 is the bottom row (smallest y).
struct RasterGeometry {
    double x0 = 0.0; ///< lower-left corner
    double y0 = 0.0;
    double cell = 1.0;
    std::size_t width = 0;  ///< columns
    std::size_t height = 0; ///< rows

    std::size_t cell_count() const noexcept { return width * height; }
    double center_x(std::size_t col) const noexcept { return x0 + (static_cast<double>(col) + 0.5) * cell; }
    double center_y(std::size_t row) const noexcept { return y0 + (static_cast<double>(row) + 0.5) * cell; }
    double x1() const noexcept { return x0 + static_cast<double>(width) * cell; }
    double y1() const noexcept { return y0 + static_cast<double>(height) * cell; }

    friend bool operator==(const RasterGeometry&, const RasterGeometry&) = default;
};

/**
 * Row-major scalar raster with a nodata mask. Valid cells always hold finite
 * values; nodata cells hold NaN.
 */
class RasterGrid {
public:
    RasterGrid() = default;
    /// All cells valid and set to `fill`.
    RasterGrid(RasterGeometry geometry, double fill);
    /// All cells nodata.
    static RasterGrid nodata(RasterGeometry geometry);

    const RasterGeometry& geometry() const noexcept { return geometry_; }
    std::size_t width() const noexcept { return geometry_.width; }
    std::size_t height() const noexcept { return geometry_.height; }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * geometry_.width + col; }

    double at(std::size_t row, std::size_t col) const { return values_[index(row, col)]; }
    double at(std::size_t cell) const { return values_[cell]; }
    bool is_nodata(std::size_t row, std::size_t col) const { return nodata_[index(row, col)] != 0; }
    bool is_nodata(std::size_t cell) const { return nodata_[cell] != 0; }

    /// Marks the cell valid. Throws std::invalid_argument on non-finite input.
    void set(std::size_t cell, double value);
    void set(std::size_t row, std::size_t col, double value) { set(index(row, col), value); }
    void set_nodata(std::size_t cell);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t nodata_count() const noexcept;

private:
    RasterGeometry geometry_;
    std::vector<double> values_;
    std::vector<std::uint8_t> nodata_;
};

/**
 * Point-to-cell assignment in compressed form: members of cell c are
 * members[offsets[c] .. offsets[c+1]), in ascending point order.
 */
struct CellIndexMap {
    static constexpr std::uint32_t kOutside = 0xFFFFFFFFu;

    RasterGeometry geometry;
    std::vector<std::uint32_t> point_cell; ///< linear cell id per point, or kOutside
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> members;

    std::size_t point_count() const noexcept { return point_cell.size(); }
    std::span<const std::uint32_t> cell_points(std::size_t cell) const noexcept
    {
        return {members.data() + offsets[cell], members.data() + offsets[cell + 1]};
    }
    std::size_t cell_size(std::size_t cell) const noexcept { return offsets[cell + 1] - offsets[cell]; }
};

/// Geometry covering `bbox` in x/y: ceil(extent / cell) columns and rows
/// (at least one of each), anchored at the box minimum.
RasterGeometry grid_geometry(const BoundingBox& bbox, double cell);

/// Points exactly on the upper edge go to the last row/column; points
/// outside the grid are marked kOutside.
CellIndexMap build_cell_index(const PointCloud& cloud, double cell, const BoundingBox& bbox);

/// Mean of the min(n_highest, |cell|) largest z values; empty cells are nodata.
RasterGrid rasterize_dsm(const PointCloud& cloud, const CellIndexMap& index, std::size_t n_highest = 4);

struct InpaintReport {
    std::size_t iterations = 0;
    double max_update = 0.0;
    bool converged = true;
};

/**
 * Fills nodata cells with the discrete harmonic interpolant of the valid
 * cells (4-neighbour Laplacian, valid cells fixed, zero-flux at the raster
 * border). Gauss-Seidel sweeps run until the largest update is below `tol`
 * or `max_iter` sweeps have been made.
 */
RasterGrid inpaint_heat(const RasterGrid& raster, double tol = 1e-4, std::size_t max_iter = 10000,
                        InpaintReport* report = nullptr);

/// Points per cell (nu); empty cells hold 0.
RasterGrid grid_feature_count(const CellIndexMap& index);

/// Population variance of member z values (sigma_z); cells with fewer than
/// two points hold 0.
RasterGrid grid_feature_zvar(const PointCloud& cloud, const CellIndexMap& index);

/// Per-point lookup of the point's cell value.
std::vector<float> cell_values_per_point(const CellIndexMap& index, const RasterGrid& raster);

/// Appends (or overwrites, with a warning) a feature column carrying each
/// point's cell value.
PointCloud assign_cell_values(PointCloud cloud, const CellIndexMap& index, const RasterGrid& raster,
                              const std::string& feature_name);

enum class RasterFormat { asc, pgm };

/// asc: ESRI ASCII grid, NODATA_value -9999, rows written top to bottom.
/// pgm: binary 16-bit P5; valid cells are scaled linearly onto 1..65535
/// (a constant raster maps to 65535), nodata is 0.
void export_raster(const RasterGrid& raster, const std::filesystem::path& path, RasterFormat format);

/// Reads an ESRI ASCII grid written by export_raster (or any tool using
/// the xllcorner/yllcorner convention).
RasterGrid import_asc(const std::filesystem::path& path);

} // namespace terrafeat
