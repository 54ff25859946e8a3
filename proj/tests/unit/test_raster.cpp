#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "terrafeat/error.hpp"
#include "terrafeat/log.hpp"
#include "terrafeat/raster.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

using namespace terrafeat;
namespace fs = std::filesystem;

namespace {

struct Quiet {
    log::Sink previous = log::set_sink({});
    ~Quiet() { log::set_sink(previous); }
};

fs::path temp_path(const std::string& name)
{
    return fs::temp_directory_path() / ("terrafeat_raster_" + std::to_string(::getpid()) + "_" + name);
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, extent), z(-3.0, 9.0);
    std::vector<Point3> pts(n);
    for (auto& p : pts)
        p = {u(rng), u(rng), z(rng)};
    return PointCloud(std::move(pts));
}

CellIndexMap index_of(const PointCloud& cloud, double cell)
{
    return build_cell_index(cloud, cell, compute_bbox(cloud));
}

} // namespace

TEST_CASE("raster cells are valid or nodata")
{
    RasterGrid r({0, 0, 1, 3, 2}, 1.5);
    CHECK(r.size() == 6);
    CHECK(r.nodata_count() == 0);
    r.set_nodata(4);
    CHECK(r.is_nodata(4));
    CHECK(std::isnan(r.at(4)));
    CHECK_THROWS_AS(r.set(0, std::nan("")), std::invalid_argument);
    r.set(4, 2.0);
    CHECK_FALSE(r.is_nodata(4));
    CHECK(RasterGrid::nodata({0, 0, 1, 2, 2}).nodata_count() == 4);
}

TEST_CASE("build_cell_index")
{
    SUBCASE("single point at the origin")
    {
        const auto idx = build_cell_index(PointCloud({{0, 0, 0}}), 1.0, {{0, 0, 0}, {0, 0, 0}});
        CHECK(idx.geometry.width == 1);
        CHECK(idx.geometry.height == 1);
        CHECK(idx.point_cell[0] == 0);
        CHECK(idx.cell_size(0) == 1);
    }
    SUBCASE("point on the upper edge goes to the last column")
    {
        const PointCloud cloud({{0, 0, 0}, {4, 1, 0}});
        const auto idx = index_of(cloud, 1.0);
        CHECK(idx.geometry.width == 4);
        CHECK(idx.geometry.height == 1);
        CHECK(idx.point_cell[1] == 3);
    }
    SUBCASE("errors")
    {
        const PointCloud cloud({{0, 0, 0}});
        CHECK_THROWS_AS(index_of(cloud, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(build_cell_index(PointCloud{}, 1.0, {}), std::invalid_argument);
    }
    SUBCASE("cell lists partition the points")
    {
        const auto cloud = random_cloud(100'000, 1, 50.0);
        const auto idx = index_of(cloud, 0.7);
        std::vector<int> seen(cloud.size(), 0);
        std::size_t total = 0;
        for (std::size_t c = 0; c < idx.geometry.cell_count(); ++c) {
            const auto members = idx.cell_points(c);
            total += members.size();
            CHECK(std::is_sorted(members.begin(), members.end()));
            for (auto m : members) {
                ++seen[m];
                CHECK(idx.point_cell[m] == c);
            }
        }
        CHECK(total == cloud.size());
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
        const auto nu = grid_feature_count(idx);
        double sum = 0;
        for (double v : nu.values())
            sum += v;
        CHECK(sum == static_cast<double>(cloud.size()));
    }
}

TEST_CASE("rasterize_dsm averages the highest points")
{
    std::vector<Point3> pts;
    for (double z : {1, 2, 3, 4, 5, 6})
        pts.push_back({0.5, 0.5, z});
    pts.push_back({2.5, 0.5, 1});
    pts.push_back({2.5, 0.5, 3});
    const PointCloud cloud(pts);
    const auto idx = build_cell_index(cloud, 1.0, {{0, 0, 0}, {3, 1, 6}});
    const auto dsm = rasterize_dsm(cloud, idx, 4);
    CHECK(dsm.at(0, 0) == doctest::Approx(4.5));
    CHECK(dsm.is_nodata(0, 1));
    CHECK(dsm.at(0, 2) == doctest::Approx(2.0));
    CHECK_THROWS_AS(rasterize_dsm(cloud, idx, 0), std::invalid_argument);
}

TEST_CASE("DSM never decreases when adding a point above the cell value")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> z(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Point3> pts;
        const int n = 1 + trial % 9;
        for (int i = 0; i < n; ++i)
            pts.push_back({0.5, 0.5, z(rng)});
        const BoundingBox box{{0, 0, 0}, {1, 1, 10}};
        const double before = rasterize_dsm(PointCloud(pts), build_cell_index(PointCloud(pts), 1.0, box)).at(0);
        pts.push_back({0.5, 0.5, before + z(rng)});
        const double after = rasterize_dsm(PointCloud(pts), build_cell_index(PointCloud(pts), 1.0, box)).at(0);
        CHECK(after >= before);
    }
}

TEST_CASE("inpaint_heat")
{
    SUBCASE("single hole surrounded by a constant")
    {
        RasterGrid r({0, 0, 1, 3, 3}, 2.0);
        r.set_nodata(4);
        CHECK(inpaint_heat(r).at(4) == doctest::Approx(2.0));
    }
    SUBCASE("complete raster unchanged")
    {
        RasterGrid r({0, 0, 1, 4, 3}, 0.0);
        for (std::size_t i = 0; i < r.size(); ++i)
            r.set(i, static_cast<double>(i * i));
        const auto out = inpaint_heat(r);
        CHECK(std::equal(out.values().begin(), out.values().end(), r.values().begin()));
    }
    SUBCASE("linear ramp with a 5x5 hole")
    {
        RasterGrid r({0, 0, 1, 20, 15}, 0.0);
        for (std::size_t row = 0; row < 15; ++row)
            for (std::size_t col = 0; col < 20; ++col)
                r.set(row, col, 0.5 * static_cast<double>(col));
        for (std::size_t row = 5; row < 10; ++row)
            for (std::size_t col = 7; col < 12; ++col)
                r.set_nodata(r.index(row, col));
        InpaintReport rep;
        const auto out = inpaint_heat(r, 1e-10, 100000, &rep);
        CHECK(rep.converged);
        double worst = 0;
        for (std::size_t row = 5; row < 10; ++row)
            for (std::size_t col = 7; col < 12; ++col)
                worst = std::max(worst, std::abs(out.at(row, col) - 0.5 * static_cast<double>(col)));
        CHECK(worst < 1e-6);
    }
    SUBCASE("maximum principle and idempotence")
    {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> v(-5.0, 5.0), u(0.0, 1.0);
        RasterGrid r = RasterGrid::nodata({0, 0, 0.5, 60, 40});
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < r.size(); ++i)
            if (u(rng) < 0.2) {
                const double x = v(rng);
                r.set(i, x);
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        const auto out = inpaint_heat(r);
        CHECK(out.nodata_count() == 0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out.at(i) >= lo);
            CHECK(out.at(i) <= hi);
            if (!r.is_nodata(i))
                CHECK(out.at(i) == r.at(i));
        }
        const auto again = inpaint_heat(out);
        CHECK(std::equal(again.values().begin(), again.values().end(), out.values().begin()));
    }
    SUBCASE("all nodata is an error")
    {
        CHECK_THROWS_AS(inpaint_heat(RasterGrid::nodata({0, 0, 1, 3, 3})), std::invalid_argument);
    }
}

TEST_CASE("nu and sigma_z")
{
    SUBCASE("a wall column next to flat ground")
    {
        std::vector<Point3> pts;
        for (int i = 0; i < 50; ++i)
            pts.push_back({0.5, 0.5, 0.1 * i});
        for (int c = 1; c < 5; ++c)
            for (int k = 0; k < 4; ++k)
                pts.push_back({c + 0.2 + 0.2 * k, 0.5, 0.0});
        const PointCloud cloud(pts);
        const auto idx = build_cell_index(cloud, 1.0, {{0, 0, 0}, {5, 1, 5}});
        const auto nu = grid_feature_count(idx);
        CHECK(nu.at(0, 0) == 50.0);
        for (std::size_t c = 1; c < nu.width(); ++c)
            CHECK(nu.at(0, c) == 4.0);
        CHECK(*std::max_element(nu.values().begin(), nu.values().end()) == nu.at(0, 0));
    }
    SUBCASE("small cells")
    {
        const PointCloud cloud({{0.5, 0.5, 7.0}, {1.5, 0.5, 0.0}, {1.5, 0.5, 2.0}, {3.5, 0.5, 1.0}});
        const auto idx = build_cell_index(cloud, 1.0, {{0, 0, 0}, {4, 1, 7}});
        const auto var = grid_feature_zvar(cloud, idx);
        const auto nu = grid_feature_count(idx);
        CHECK(var.at(0, 0) == 0.0);
        CHECK(var.at(0, 1) == doctest::Approx(1.0));
        CHECK(var.at(0, 2) == 0.0); // empty
        CHECK(nu.at(0, 2) == 0.0);
        CHECK_FALSE(nu.is_nodata(0, 2));
        CHECK_FALSE(var.is_nodata(0, 2));
    }
    SUBCASE("variance matches the two-pass formula")
    {
        auto cloud = random_cloud(50'000, 3, 20.0);
        const auto idx = index_of(cloud, 1.3);
        const auto var = grid_feature_zvar(cloud, idx);
        for (std::size_t c = 0; c < idx.geometry.cell_count(); ++c) {
            std::vector<double> z;
            for (auto m : idx.cell_points(c))
                z.push_back(cloud.positions()[m].z + 1e4); // offset stresses cancellation
            const double expect = oracle::variance(z);
            CHECK(var.at(c) == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("assign_cell_values is a lookup")
{
    auto cloud = random_cloud(10'000, 6, 10.0);
    const auto idx = index_of(cloud, 0.5);
    const auto nu = grid_feature_count(idx);
    const auto out = assign_cell_values(cloud, idx, nu, "nu");
    const auto& col = out.feature("nu");
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.positions()[i];
        const auto c = std::min<std::size_t>(static_cast<std::size_t>((p.x - idx.geometry.x0) / 0.5), nu.width() - 1);
        const auto r = std::min<std::size_t>(static_cast<std::size_t>((p.y - idx.geometry.y0) / 0.5), nu.height() - 1);
        CHECK(col[i] == static_cast<float>(nu.at(r, c)));
        CHECK(col[i] == static_cast<float>(idx.cell_size(idx.point_cell[i])));
    }

    SUBCASE("permuting points permutes the column")
    {
        std::vector<std::size_t> perm(cloud.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), std::mt19937_64(2));
        const auto shuffled = cloud.select(perm);
        const auto sidx = build_cell_index(shuffled, 0.5, compute_bbox(cloud));
        const auto scol = assign_cell_values(shuffled, sidx, grid_feature_count(sidx), "nu").feature("nu");
        for (std::size_t i = 0; i < perm.size(); ++i)
            CHECK(scol[i] == col[perm[i]]);
    }
    SUBCASE("overwrite warns")
    {
        std::size_t warnings = 0;
        auto previous = log::set_sink([&](const std::string&) { ++warnings; });
        const auto twice = assign_cell_values(out, idx, nu, "nu");
        log::set_sink(previous);
        CHECK(warnings == 1);
        CHECK(twice.feature_names().size() == 1);
    }
    SUBCASE("geometry mismatch")
    {
        CHECK_THROWS_AS(assign_cell_values(cloud, idx, RasterGrid({0, 0, 1, 2, 2}, 0.0), "x1"),
                        std::invalid_argument);
    }
}

TEST_CASE("raster export")
{
    SUBCASE("asc header and layout")
    {
        RasterGrid r({10, 20, 0.5, 2, 2}, 0.0);
        r.set(0, 0, 1.0);
        r.set(0, 1, 2.0);
        r.set(1, 0, 3.0);
        r.set_nodata(r.index(1, 1));
        const auto path = temp_path("a.asc");
        export_raster(r, path, RasterFormat::asc);
        std::istringstream in(read_file(path));
        std::string key;
        double value;
        std::vector<std::pair<std::string, double>> header;
        for (int i = 0; i < 6; ++i) {
            in >> key >> value;
            header.emplace_back(key, value);
        }
        CHECK(header[0] == std::pair<std::string, double>{"ncols", 2});
        CHECK(header[1] == std::pair<std::string, double>{"nrows", 2});
        CHECK(header[2].second == 10);
        CHECK(header[3].second == 20);
        CHECK(header[4].second == 0.5);
        CHECK(header[5] == std::pair<std::string, double>{"NODATA_value", -9999});
        std::vector<double> cells(4);
        for (auto& c : cells)
            in >> c;
        CHECK(cells == std::vector<double>{3, -9999, 1, 2}); // top row first
        const auto back = import_asc(path);
        CHECK(back.geometry() == r.geometry());
        CHECK(back.is_nodata(1, 1));
        CHECK(back.at(1, 0) == 3.0);
        fs::remove(path);
    }
    SUBCASE("asc round trip is exact")
    {
        RasterGrid r({-3.25, 7.125, 0.25, 13, 9}, 0.0);
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 100.0);
        for (std::size_t i = 0; i < r.size(); ++i)
            r.set(i, n(rng));
        const auto path = temp_path("b.asc");
        export_raster(r, path, RasterFormat::asc);
        const auto back = import_asc(path);
        CHECK(back.geometry() == r.geometry());
        CHECK(std::equal(back.values().begin(), back.values().end(), r.values().begin()));
        fs::remove(path);
    }
    SUBCASE("pgm of a constant raster")
    {
        RasterGrid r({0, 0, 1, 3, 2}, 4.0);
        const auto path = temp_path("c.pgm");
        export_raster(r, path, RasterFormat::pgm);
        const auto bytes = read_file(path);
        const std::string header = "P5\n3 2\n65535\n";
        REQUIRE(bytes.size() == header.size() + 12);
        CHECK(bytes.compare(0, header.size(), header) == 0);
        for (std::size_t i = header.size(); i < bytes.size(); i += 2)
            CHECK((static_cast<unsigned char>(bytes[i]) << 8 | static_cast<unsigned char>(bytes[i + 1])) == 65535);
        fs::remove(path);
    }
    SUBCASE("pgm nodata is black, range is stretched")
    {
        RasterGrid r({0, 0, 1, 3, 1}, 0.0);
        r.set(0, 1.0);
        r.set(1, 3.0);
        r.set_nodata(2);
        const auto path = temp_path("d.pgm");
        export_raster(r, path, RasterFormat::pgm);
        const auto bytes = read_file(path);
        const std::size_t off = std::string("P5\n3 1\n65535\n").size();
        auto px = [&](int i) {
            return static_cast<unsigned char>(bytes[off + 2 * i]) << 8 | static_cast<unsigned char>(bytes[off + 2 * i + 1]);
        };
        CHECK(px(0) == 1);
        CHECK(px(1) == 65535);
        CHECK(px(2) == 0);
        fs::remove(path);
    }
    SUBCASE("unwritable path")
    {
        CHECK_THROWS_AS(export_raster(RasterGrid({0, 0, 1, 1, 1}, 0.0), "/nonexistent_dir/x.asc", RasterFormat::asc),
                        IoError);
    }
}
