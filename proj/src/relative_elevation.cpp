#include "terrafeat/ground.hpp"
#include "terrafeat/log.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terrafeat {

std::vector<float> relative_elevation_column(const PointCloud& cloud, const RasterGrid& dtm, RelzMode mode,
                                             std::size_t* clamped)
{
    if (dtm.size() == 0)
        throw std::invalid_argument("relative elevation: empty DTM");
    if (dtm.nodata_count() > 0)
        throw std::invalid_argument("relative elevation: DTM contains nodata cells");
    const auto& g = dtm.geometry();
    const auto& pts = cloud.positions();
    std::vector<float> out(pts.size());
    std::size_t outside = 0;
    const double x1 = g.x1();
    const double y1 = g.y1();
    const auto wmax = static_cast<double>(g.width - 1);
    const auto hmax = static_cast<double>(g.height - 1);

    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point3& p = pts[i];
        if (p.x < g.x0 || p.x > x1 || p.y < g.y0 || p.y > y1)
            ++outside;
        double ground;
        if (mode == RelzMode::cell) {
            const double u = std::clamp(std::floor((p.x - g.x0) / g.cell), 0.0, wmax);
            const double v = std::clamp(std::floor((p.y - g.y0) / g.cell), 0.0, hmax);
            ground = dtm.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
        } else {
            // Cell centers sit at half-integer grid coordinates.
            const double u = std::clamp((p.x - g.x0) / g.cell - 0.5, 0.0, wmax);
            const double v = std::clamp((p.y - g.y0) / g.cell - 0.5, 0.0, hmax);
            const auto c0 = static_cast<std::size_t>(std::min(std::floor(u), std::max(0.0, wmax - 1.0)));
            const auto r0 = static_cast<std::size_t>(std::min(std::floor(v), std::max(0.0, hmax - 1.0)));
            const std::size_t c1 = std::min(c0 + 1, g.width - 1);
            const std::size_t r1 = std::min(r0 + 1, g.height - 1);
            const double tu = u - static_cast<double>(c0);
            const double tv = v - static_cast<double>(r0);
            const double bottom = (1.0 - tu) * dtm.at(r0, c0) + tu * dtm.at(r0, c1);
            const double top = (1.0 - tu) * dtm.at(r1, c0) + tu * dtm.at(r1, c1);
            ground = (1.0 - tv) * bottom + tv * top;
        }
        out[i] = static_cast<float>(p.z - ground);
    }
    if (outside > 0)
        log::warn("relative elevation: " + std::to_string(outside) +
                  " points outside the DTM were clamped to its edge");
    if (clamped)
        *clamped = outside;
    return out;
}

PointCloud relative_elevation(PointCloud cloud, const RasterGrid& dtm, RelzMode mode)
{
    auto column = relative_elevation_column(cloud, dtm, mode);
    if (cloud.set_feature(kRelativeElevation, std::move(column)))
        log::warn("feature column 'h_r' overwritten");
    return cloud;
}

PointCloud relative_elevation_plane(PointCloud cloud, const Plane& plane)
{
    if (!std::isfinite(plane.a) || !std::isfinite(plane.b) || !std::isfinite(plane.c))
        throw std::invalid_argument("relative elevation: non-finite plane");
    std::vector<float> column(cloud.size());
    const auto& pts = cloud.positions();
    for (std::size_t i = 0; i < pts.size(); ++i)
        column[i] = static_cast<float>(pts[i].z - plane.height(pts[i].x, pts[i].y));
    if (cloud.set_feature(kRelativeElevation, std::move(column)))
        log::warn("feature column 'h_r' overwritten");
    return cloud;
}

RasterGrid ndsm(const RasterGrid& dsm, const RasterGrid& dtm)
{
    if (!(dsm.geometry() == dtm.geometry()))
        throw std::invalid_argument("ndsm: DSM and DTM geometries differ");
    RasterGrid out = RasterGrid::nodata(dsm.geometry());
    for (std::size_t c = 0; c < dsm.size(); ++c)
        if (!dsm.is_nodata(c) && !dtm.is_nodata(c))
            out.set(c, dsm.at(c) - dtm.at(c));
    return out;
}

} // namespace terrafeat
