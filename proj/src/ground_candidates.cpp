#include "terrafeat/error.hpp"
#include "terrafeat/ground.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace terrafeat {
namespace {

// Sliding minimum over [c - w, c + w] (clipped to the row) in O(len),
// van Herk / Gil-Werman style with +inf padding.
void sliding_min(const double* row, std::size_t len, std::size_t w, std::vector<double>& pad,
                 std::vector<double>& g, std::vector<double>& h, double* out)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t k = 2 * w + 1;
    const std::size_t n = ((len + 2 * w + k - 1) / k) * k;
    pad.assign(n, inf);
    std::copy(row, row + len, pad.begin() + static_cast<std::ptrdiff_t>(w));
    g.resize(n);
    h.resize(n);
    for (std::size_t b = 0; b < n; b += k) {
        g[b] = pad[b];
        for (std::size_t i = 1; i < k; ++i)
            g[b + i] = std::min(g[b + i - 1], pad[b + i]);
        h[b + k - 1] = pad[b + k - 1];
        for (std::size_t i = k - 1; i-- > 0;)
            h[b + i] = std::min(h[b + i + 1], pad[b + i]);
    }
    for (std::size_t c = 0; c < len; ++c)
        out[c] = std::min(h[c], g[c + k - 1]);
}

} // namespace

RasterGrid GroundCandidates::mask() const
{
    RasterGrid m(geometry, 0.0);
    for (auto c : cells)
        m.set(c, 1.0);
    return m;
}

RasterGrid circular_min_filter(const RasterGrid& raster, double radius)
{
    const auto& geo = raster.geometry();
    if (!(radius >= geo.cell))
        throw std::invalid_argument("minimum filter radius must be at least one cell");
    if (raster.nodata_count() > 0)
        throw std::invalid_argument("minimum filter needs a raster without nodata (inpaint first)");

    const std::size_t width = geo.width;
    const std::size_t height = geo.height;
    const double r_cells = radius / geo.cell;
    const auto reach = static_cast<std::size_t>(std::floor(r_cells + 1e-9));
    std::vector<double> out(raster.size(), std::numeric_limits<double>::infinity());
    std::vector<double> pad, g, h, seg(width);
    const double* src = raster.values().data();

    for (std::size_t dy = 0; dy <= reach && dy < height; ++dy) {
        const double span = r_cells * r_cells - static_cast<double>(dy * dy);
        const auto w = static_cast<std::size_t>(std::floor(std::sqrt(std::max(0.0, span)) + 1e-9));
        for (std::size_t s = 0; s < height; ++s) {
            sliding_min(src + s * width, width, std::min(w, width), pad, g, h, seg.data());
            // Row s contributes to rows s - dy and s + dy.
            auto merge = [&](std::size_t target) {
                double* dst = out.data() + target * width;
                for (std::size_t c = 0; c < width; ++c)
                    dst[c] = std::min(dst[c], seg[c]);
            };
            if (s >= dy)
                merge(s - dy);
            if (dy > 0 && s + dy < height)
                merge(s + dy);
        }
    }
    RasterGrid result(geo, 0.0);
    for (std::size_t c = 0; c < out.size(); ++c)
        result.set(c, out[c]);
    return result;
}

GroundCandidates extract_ground_candidates(const RasterGrid& dsm, double radius, double tol,
                                           const RasterGrid* mask)
{
    if (!(tol >= 0.0))
        throw std::invalid_argument("ground candidate tolerance must be non-negative");
    if (mask && mask->geometry().width != dsm.width())
        throw std::invalid_argument("mask raster dimensions differ from the DSM");
    if (mask && mask->geometry().height != dsm.height())
        throw std::invalid_argument("mask raster dimensions differ from the DSM");

    const RasterGrid window_min = circular_min_filter(dsm, radius);
    const auto& geo = dsm.geometry();
    GroundCandidates out;
    out.geometry = geo;
    for (std::size_t c = 0; c < dsm.size(); ++c) {
        if (mask && !mask->is_nodata(c) && mask->at(c) != 0.0)
            continue;
        if (dsm.at(c) <= window_min.at(c) + tol) {
            out.cells.push_back(c);
            out.samples.push_back({geo.center_x(c % geo.width), geo.center_y(c / geo.width), dsm.at(c)});
        }
    }
    if (out.cells.empty())
        throw NumericalError("no ground candidates found");
    return out;
}

} // namespace terrafeat
