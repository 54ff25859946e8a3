#include "terrafeat/error.hpp"
#include "terrafeat/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace terrafeat {
namespace {

constexpr double kAscNodata = -9999.0;

void write_asc(const RasterGrid& raster, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    const auto& g = raster.geometry();
    std::string buf;
    auto number = [&buf](double v) {
        char tmp[64];
        auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
        buf.append(tmp, ptr);
    };
    buf += "ncols " + std::to_string(g.width) + "\n";
    buf += "nrows " + std::to_string(g.height) + "\n";
    buf += "xllcorner ";
    number(g.x0);
    buf += "\nyllcorner ";
    number(g.y0);
    buf += "\ncellsize ";
    number(g.cell);
    buf += "\nNODATA_value -9999\n";
    for (std::size_t r = g.height; r-- > 0;) {
        for (std::size_t c = 0; c < g.width; ++c) {
            if (c)
                buf += ' ';
            number(raster.is_nodata(r, c) ? kAscNodata : raster.at(r, c));
        }
        buf += '\n';
        if (buf.size() > (1 << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

void write_pgm(const RasterGrid& raster, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    const auto& g = raster.geometry();
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t c = 0; c < raster.size(); ++c)
        if (!raster.is_nodata(c)) {
            lo = std::min(lo, raster.at(c));
            hi = std::max(hi, raster.at(c));
        }
    out << "P5\n" << g.width << ' ' << g.height << "\n65535\n";
    std::string buf;
    buf.reserve(g.width * 2);
    for (std::size_t r = g.height; r-- > 0;) {
        buf.clear();
        for (std::size_t c = 0; c < g.width; ++c) {
            std::uint16_t level = 0;
            if (!raster.is_nodata(r, c)) {
                level = 65535;
                if (hi > lo)
                    level = static_cast<std::uint16_t>(
                        1 + std::lround((raster.at(r, c) - lo) / (hi - lo) * 65534.0));
            }
            buf += static_cast<char>(level >> 8);
            buf += static_cast<char>(level & 0xFF);
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace

void export_raster(const RasterGrid& raster, const std::filesystem::path& path, RasterFormat format)
{
    if (raster.size() == 0)
        throw std::invalid_argument("export_raster: empty raster");
    if (format == RasterFormat::asc)
        write_asc(raster, path);
    else
        write_pgm(raster, path);
}

RasterGrid import_asc(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    RasterGeometry g;
    double nodata = kAscNodata;
    bool center_x = false, center_y = false;
    int have = 0;
    std::string key;
    // Six header keys, in any order and case.
    for (int k = 0; k < 6; ++k) {
        double value = 0;
        if (!(in >> key >> value))
            throw IoError(path.string() + ": malformed asc header");
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        if (key == "ncols") { g.width = static_cast<std::size_t>(value); have |= 1; }
        else if (key == "nrows") { g.height = static_cast<std::size_t>(value); have |= 2; }
        else if (key == "xllcorner" || key == "xllcenter") { g.x0 = value; center_x = key == "xllcenter"; have |= 4; }
        else if (key == "yllcorner" || key == "yllcenter") { g.y0 = value; center_y = key == "yllcenter"; have |= 8; }
        else if (key == "cellsize") { g.cell = value; have |= 16; }
        else if (key == "nodata_value") { nodata = value; have |= 32; }
        else throw IoError(path.string() + ": unknown asc header key '" + key + "'");
    }
    if ((have & 31) != 31 || g.width == 0 || g.height == 0 || !(g.cell > 0))
        throw IoError(path.string() + ": incomplete asc header");
    if (center_x)
        g.x0 -= 0.5 * g.cell;
    if (center_y)
        g.y0 -= 0.5 * g.cell;

    RasterGrid raster = RasterGrid::nodata(g);
    std::string tok;
    for (std::size_t r = g.height; r-- > 0;) {
        for (std::size_t c = 0; c < g.width; ++c) {
            if (!(in >> tok))
                throw IoError(path.string() + ": truncated asc data");
            double v = 0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size())
                throw IoError(path.string() + ": bad asc value '" + tok + "'");
            if (v != nodata && std::isfinite(v))
                raster.set(r, c, v);
        }
    }
    return raster;
}

} // namespace terrafeat
