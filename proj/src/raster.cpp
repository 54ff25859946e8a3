#include "terrafeat/raster.hpp"

#include "terrafeat/log.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace terrafeat {

RasterGrid::RasterGrid(RasterGeometry geometry, double fill)
    : geometry_(geometry), values_(geometry.cell_count(), fill), nodata_(geometry.cell_count(), 0)
{
    if (!(geometry.cell > 0.0))
        throw std::invalid_argument("raster cell size must be positive");
    if (!std::isfinite(fill))
        throw std::invalid_argument("raster fill value must be finite");
}

RasterGrid RasterGrid::nodata(RasterGeometry geometry)
{
    RasterGrid r(geometry, 0.0);
    std::fill(r.values_.begin(), r.values_.end(), std::numeric_limits<double>::quiet_NaN());
    std::fill(r.nodata_.begin(), r.nodata_.end(), std::uint8_t{1});
    return r;
}

void RasterGrid::set(std::size_t cell, double value)
{
    if (!std::isfinite(value))
        throw std::invalid_argument("raster values must be finite; use set_nodata");
    values_[cell] = value;
    nodata_[cell] = 0;
}

void RasterGrid::set_nodata(std::size_t cell)
{
    values_[cell] = std::numeric_limits<double>::quiet_NaN();
    nodata_[cell] = 1;
}

std::size_t RasterGrid::nodata_count() const noexcept
{
    return static_cast<std::size_t>(std::count(nodata_.begin(), nodata_.end(), std::uint8_t{1}));
}

RasterGeometry grid_geometry(const BoundingBox& bbox, double cell)
{
    if (!(cell > 0.0) || !std::isfinite(cell))
        throw std::invalid_argument("grid cell size must be positive");
    auto cells = [cell](double extent) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / cell)));
    };
    return {bbox.min.x, bbox.min.y, cell, cells(bbox.max.x - bbox.min.x), cells(bbox.max.y - bbox.min.y)};
}

CellIndexMap build_cell_index(const PointCloud& cloud, double cell, const BoundingBox& bbox)
{
    if (cloud.empty())
        throw std::invalid_argument("build_cell_index: empty cloud");
    if (cloud.size() >= CellIndexMap::kOutside)
        throw std::invalid_argument("build_cell_index: too many points for 32-bit indices");
    CellIndexMap index;
    index.geometry = grid_geometry(bbox, cell);
    const RasterGeometry& g = index.geometry;
    if (g.cell_count() >= CellIndexMap::kOutside)
        throw std::invalid_argument("build_cell_index: grid too large");

    const auto& pts = cloud.positions();
    index.point_cell.resize(pts.size());
    const double x1 = g.x1();
    const double y1 = g.y1();
    std::size_t outside = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point3& p = pts[i];
        if (!(p.x >= g.x0 && p.x <= x1 && p.y >= g.y0 && p.y <= y1)) {
            index.point_cell[i] = CellIndexMap::kOutside;
            ++outside;
            continue;
        }
        const auto col = std::min(g.width - 1, static_cast<std::size_t>((p.x - g.x0) / g.cell));
        const auto row = std::min(g.height - 1, static_cast<std::size_t>((p.y - g.y0) / g.cell));
        index.point_cell[i] = static_cast<std::uint32_t>(row * g.width + col);
    }
    if (outside > 0)
        log::warn("build_cell_index: " + std::to_string(outside) + " points lie outside the grid");

    // Counting sort keeps members in ascending point order.
    index.offsets.assign(g.cell_count() + 1, 0);
    for (auto c : index.point_cell)
        if (c != CellIndexMap::kOutside)
            ++index.offsets[c + 1];
    std::partial_sum(index.offsets.begin(), index.offsets.end(), index.offsets.begin());
    index.members.resize(index.offsets.back());
    std::vector<std::uint32_t> cursor(index.offsets.begin(), index.offsets.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto c = index.point_cell[i];
        if (c != CellIndexMap::kOutside)
            index.members[cursor[c]++] = static_cast<std::uint32_t>(i);
    }
    return index;
}

namespace {

void check_index(const PointCloud& cloud, const CellIndexMap& index)
{
    if (index.point_count() != cloud.size())
        throw std::invalid_argument("cell index was built for a different cloud");
}

void check_raster(const CellIndexMap& index, const RasterGrid& raster)
{
    if (raster.width() != index.geometry.width || raster.height() != index.geometry.height)
        throw std::invalid_argument("raster dimensions do not match the cell index");
}

} // namespace

RasterGrid rasterize_dsm(const PointCloud& cloud, const CellIndexMap& index, std::size_t n_highest)
{
    if (n_highest < 1)
        throw std::invalid_argument("rasterize_dsm: n_highest must be at least 1");
    check_index(cloud, index);
    RasterGrid dsm = RasterGrid::nodata(index.geometry);
    const auto& pts = cloud.positions();
    std::vector<double> zs;
    for (std::size_t c = 0; c < index.geometry.cell_count(); ++c) {
        const auto members = index.cell_points(c);
        if (members.empty())
            continue;
        zs.clear();
        for (auto i : members)
            zs.push_back(pts[i].z);
        const std::size_t n = std::min(n_highest, zs.size());
        std::nth_element(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(n - 1), zs.end(), std::greater<>());
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            sum += zs[k];
        dsm.set(c, sum / static_cast<double>(n));
    }
    return dsm;
}

RasterGrid inpaint_heat(const RasterGrid& raster, double tol, std::size_t max_iter, InpaintReport* report)
{
    const std::size_t w = raster.width();
    const std::size_t h = raster.height();
    std::vector<std::size_t> holes;
    for (std::size_t c = 0; c < raster.size(); ++c)
        if (raster.is_nodata(c))
            holes.push_back(c);
    if (holes.size() == raster.size())
        throw std::invalid_argument("inpaint_heat: raster has no valid cells");
    InpaintReport local;
    if (holes.empty()) {
        if (report)
            *report = local;
        return raster;
    }

    std::vector<double> v(raster.values().begin(), raster.values().end());
    std::vector<std::uint8_t> known(raster.size());
    for (std::size_t c = 0; c < raster.size(); ++c)
        known[c] = raster.is_nodata(c) ? 0 : 1;

    // Initial guess: linear interpolation between the nearest valid cells of
    // the row (or column when the row has none). Every initial value is a
    // convex combination of valid values, and so is every sweep, which keeps
    // all iterates inside the valid range.
    double valid_sum = 0.0;
    std::size_t valid_n = 0;
    for (std::size_t c = 0; c < raster.size(); ++c)
        if (known[c]) {
            valid_sum += v[c];
            ++valid_n;
        }
    const double valid_mean = valid_sum / static_cast<double>(valid_n);
    std::vector<std::uint8_t> seeded(known);
    auto scan = [&](std::size_t count, std::size_t len, auto cell_of) {
        for (std::size_t line = 0; line < count; ++line) {
            auto fill = [&](std::size_t m, double value) {
                const std::size_t c = cell_of(line, m);
                if (!seeded[c]) {
                    v[c] = value;
                    seeded[c] = 1;
                }
            };
            std::ptrdiff_t prev = -1;
            for (std::size_t k = 0; k < len; ++k) {
                if (!known[cell_of(line, k)])
                    continue;
                const double right = v[cell_of(line, k)];
                if (prev < 0) {
                    for (std::size_t m = 0; m < k; ++m)
                        fill(m, right);
                } else {
                    const auto p = static_cast<std::size_t>(prev);
                    const double left = v[cell_of(line, p)];
                    for (std::size_t m = p + 1; m < k; ++m) {
                        const double t = static_cast<double>(m - p) / static_cast<double>(k - p);
                        fill(m, (1.0 - t) * left + t * right);
                    }
                }
                prev = static_cast<std::ptrdiff_t>(k);
            }
            if (prev >= 0) {
                const auto p = static_cast<std::size_t>(prev);
                for (std::size_t m = p + 1; m < len; ++m)
                    fill(m, v[cell_of(line, p)]);
            }
        }
    };
    scan(h, w, [w](std::size_t row, std::size_t col) { return row * w + col; });
    scan(w, h, [w](std::size_t col, std::size_t row) { return row * w + col; });
    for (auto c : holes)
        if (!seeded[c])
            v[c] = valid_mean;

    for (local.iterations = 0; local.iterations < max_iter;) {
        double max_update = 0.0;
        for (auto c : holes) {
            const std::size_t row = c / w;
            const std::size_t col = c % w;
            double sum = 0.0;
            int n = 0;
            if (col > 0) { sum += v[c - 1]; ++n; }
            if (col + 1 < w) { sum += v[c + 1]; ++n; }
            if (row > 0) { sum += v[c - w]; ++n; }
            if (row + 1 < h) { sum += v[c + w]; ++n; }
            if (n == 0)
                continue;
            const double next = sum / n;
            max_update = std::max(max_update, std::abs(next - v[c]));
            v[c] = next;
        }
        ++local.iterations;
        local.max_update = max_update;
        if (max_update < tol)
            break;
    }
    local.converged = local.max_update < tol;
    if (!local.converged)
        log::warn("inpaint_heat: stopped after " + std::to_string(local.iterations) +
                  " sweeps with max update " + std::to_string(local.max_update));

    RasterGrid out(raster.geometry(), 0.0);
    for (std::size_t c = 0; c < raster.size(); ++c)
        out.set(c, v[c]);
    if (report)
        *report = local;
    return out;
}

RasterGrid grid_feature_count(const CellIndexMap& index)
{
    RasterGrid nu(index.geometry, 0.0);
    for (std::size_t c = 0; c < index.geometry.cell_count(); ++c)
        nu.set(c, static_cast<double>(index.cell_size(c)));
    return nu;
}

RasterGrid grid_feature_zvar(const PointCloud& cloud, const CellIndexMap& index)
{
    check_index(cloud, index);
    RasterGrid var(index.geometry, 0.0);
    const auto& pts = cloud.positions();
    for (std::size_t c = 0; c < index.geometry.cell_count(); ++c) {
        const auto members = index.cell_points(c);
        if (members.size() < 2)
            continue;
        // Welford update
        double mean = 0.0;
        double m2 = 0.0;
        std::size_t n = 0;
        for (auto i : members) {
            ++n;
            const double d = pts[i].z - mean;
            mean += d / static_cast<double>(n);
            m2 += d * (pts[i].z - mean);
        }
        var.set(c, m2 / static_cast<double>(n));
    }
    return var;
}

std::vector<float> cell_values_per_point(const CellIndexMap& index, const RasterGrid& raster)
{
    check_raster(index, raster);
    std::vector<float> out(index.point_count());
    std::size_t missing = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto c = index.point_cell[i];
        if (c == CellIndexMap::kOutside || raster.is_nodata(c)) {
            out[i] = std::numeric_limits<float>::quiet_NaN();
            ++missing;
        } else {
            out[i] = static_cast<float>(raster.at(c));
        }
    }
    if (missing > 0)
        log::warn(std::to_string(missing) + " points fall outside the raster or on nodata cells");
    return out;
}

PointCloud assign_cell_values(PointCloud cloud, const CellIndexMap& index, const RasterGrid& raster,
                              const std::string& feature_name)
{
    check_index(cloud, index);
    if (cloud.set_feature(feature_name, cell_values_per_point(index, raster)))
        log::warn("feature column '" + feature_name + "' overwritten");
    return cloud;
}

} // namespace terrafeat
