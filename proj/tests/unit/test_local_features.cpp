#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "terrafeat/cloud_io.hpp"
#include "terrafeat/local_features.hpp"
#include "terrafeat/neighbor_index.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace terrafeat;

namespace {

std::vector<Point3> random_points(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<Point3> pts(n);
    for (auto& p : pts)
        p = {u(rng), u(rng), u(rng)};
    return pts;
}

/// Undulating sheet with small noise: well separated eigenvalues.
std::vector<Point3> sheet(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<Point3> pts(n);
    for (auto& p : pts) {
        const double x = u(rng), y = u(rng);
        p = {x, y, std::sin(x / 3.0) + 0.3 * std::cos(y / 2.0) + noise(rng)};
    }
    return pts;
}

PointCloud transformed(const std::vector<Point3>& pts, const Eigen::Matrix3d& m, const Eigen::Vector3d& t)
{
    std::vector<Point3> out;
    for (const auto& p : pts) {
        const Eigen::Vector3d q = m * Eigen::Vector3d(p.x, p.y, p.z) + t;
        out.push_back({q.x(), q.y(), q.z()});
    }
    return PointCloud(std::move(out));
}

LocalFeatureSet features_of(const PointCloud& c, std::size_t kp = 10, std::size_t kn = 100)
{
    return structure_tensor_features(c, build_neighbor_index(c), kp, kn);
}

} // namespace

TEST_CASE("knn against exhaustive search")
{
    const auto pts = random_points(10'000, 1);
    const NeighborIndex index(pts);
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    std::uniform_real_distribution<double> u(-1.0, 11.0);
    for (int q = 0; q < 100; ++q) {
        const Point3 query = q % 2 ? pts[pick(rng)] : Point3{u(rng), u(rng), u(rng)};
        for (std::size_t k : {1u, 10u, 100u}) {
            const auto got = index.knn(query, k);
            const auto want = oracle::brute_knn(pts, query, k);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < k; ++i)
                CHECK(got[i].index == want[i]);
            for (std::size_t i = 1; i < k; ++i)
                CHECK(got[i - 1].dist2 <= got[i].dist2);
        }
    }
}

TEST_CASE("knn small cases")
{
    SUBCASE("k larger than the cloud")
    {
        const std::vector<Point3> one{{1, 2, 3}};
        const NeighborIndex index(one);
        const auto r = index.knn({0, 0, 0}, 5);
        REQUIRE(r.size() == 1);
        CHECK(r[0].index == 0);
    }
    SUBCASE("grid node finds itself first")
    {
        std::vector<Point3> grid;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j)
                for (int k = 0; k < 3; ++k)
                    grid.push_back({1.0 * i, 1.0 * j, 1.0 * k});
        const NeighborIndex index(grid);
        for (std::size_t q : {0u, 57u, 131u, 299u}) {
            const auto r = index.knn(grid[q], 7);
            CHECK(r[0].index == q);
            CHECK(r[0].dist2 == 0.0);
            // Equidistant neighbours come in index order.
            for (std::size_t i = 1; i < r.size(); ++i)
                if (r[i - 1].dist2 == r[i].dist2)
                    CHECK(r[i - 1].index < r[i].index);
        }
    }
    SUBCASE("duplicates")
    {
        const std::vector<Point3> dup(50, Point3{1, 1, 1});
        const NeighborIndex index(dup);
        const auto r = index.knn({1, 1, 1}, 10);
        for (std::size_t i = 0; i < r.size(); ++i)
            CHECK(r[i].index == i);
    }
    SUBCASE("empty cloud")
    {
        CHECK_THROWS_AS(build_neighbor_index(PointCloud{}), std::invalid_argument);
    }
}

TEST_CASE("features against the covariance oracle")
{
    const auto pts = sheet(20'000, 3);
    const PointCloud cloud(pts);
    const auto f = features_of(cloud);
    for (std::size_t i = 0; i < pts.size(); i += 97) {
        const auto o = oracle::local_features(pts, i, 10, 100);
        CHECK(f.planarity[i] == doctest::Approx(o.planarity).epsilon(1e-9));
        CHECK(std::abs(f.normal_z[i] - o.normal_z) < 1e-6);
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(f.eigenvalues[i][j] - o.eigenvalues[j]) <= 1e-9 * o.eigenvalues[0] + 1e-18);
    }
}

TEST_CASE("canonical shapes")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    SUBCASE("plane")
    {
        std::vector<Point3> pts;
        for (int i = 0; i < 400; ++i)
            pts.push_back({u(rng), u(rng), 0.0});
        const auto f = features_of(PointCloud(pts));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(f.eigenvalues[i][2] == 0.0);
            CHECK(f.normal_z[i] == 1.0);
        }
    }
    SUBCASE("wall")
    {
        std::vector<Point3> pts;
        for (int i = 0; i < 400; ++i)
            pts.push_back({2.0, u(rng), u(rng)});
        const auto f = features_of(PointCloud(pts));
        for (double nz : f.normal_z)
            CHECK(nz < 1e-6);
    }
    SUBCASE("line")
    {
        std::vector<Point3> pts;
        for (int i = 0; i < 200; ++i)
            pts.push_back({u(rng), 1.0, 1.0});
        const auto f = features_of(PointCloud(pts));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(f.planarity[i] == doctest::Approx(0.0));
            CHECK(f.linearity[i] == doctest::Approx(1.0));
        }
    }
    SUBCASE("coincident points fall back")
    {
        const std::vector<Point3> pts(30, Point3{3, 3, 3});
        const auto f = features_of(PointCloud(pts));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(f.planarity[i] == 0.0);
            CHECK(f.normal_z[i] == 1.0);
            CHECK(f.linearity[i] == 0.0);
            CHECK(f.omnivariance[i] == 0.0);
        }
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(features_of(PointCloud({{0, 0, 0}, {1, 1, 1}})), std::invalid_argument);
        const PointCloud c(random_points(50, 1));
        CHECK_THROWS_AS(features_of(c, 2, 10), std::invalid_argument);
        CHECK_THROWS_AS(features_of(c, 10, 2), std::invalid_argument);
    }
}

TEST_CASE("ordering, ranges and finiteness on a random cloud")
{
    const PointCloud cloud(random_points(5000, 6));
    const auto f = features_of(cloud);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& l = f.eigenvalues[i];
        CHECK(l[0] >= l[1]);
        CHECK(l[1] >= l[2]);
        CHECK(l[2] >= 0.0);
        CHECK(f.normal_z[i] >= 0.0);
        CHECK(f.normal_z[i] <= 1.0);
        CHECK(std::isfinite(f.planarity[i]));
        CHECK(std::isfinite(f.omnivariance[i]));
        CHECK(f.planarity[i] >= 0.0);
    }
}

TEST_CASE("invariance under rigid motion and scaling")
{
    const auto pts = sheet(8000, 7);
    const auto base = features_of(PointCloud(pts));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> shift(-500.0, 500.0);

    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::Vector3d t(shift(rng), shift(rng), shift(rng));
        const Eigen::Matrix3d about_z = Eigen::AngleAxisd(angle(rng), Eigen::Vector3d::UnitZ()).toRotationMatrix();
        const Eigen::Matrix3d any = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
        const Eigen::Matrix3d mirror = Eigen::Vector3d(1, -1, 1).asDiagonal();

        const auto fz = features_of(transformed(pts, about_z, t));
        const auto fa = features_of(transformed(pts, any, t));
        const auto fm = features_of(transformed(pts, about_z * mirror, t));
        double d_eta = 0, d_nz = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d_eta = std::max({d_eta, std::abs(fz.planarity[i] - base.planarity[i]),
                              std::abs(fa.planarity[i] - base.planarity[i]),
                              std::abs(fm.planarity[i] - base.planarity[i])});
            d_nz = std::max({d_nz, std::abs(fz.normal_z[i] - base.normal_z[i]),
                             std::abs(fm.normal_z[i] - base.normal_z[i])});
        }
        CHECK(d_eta < 1e-6);
        CHECK(d_nz < 1e-6);
    }

    SUBCASE("uniform scale")
    {
        const double s = 3.5;
        const auto fs = features_of(transformed(pts, s * Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(std::abs(fs.planarity[i] - base.planarity[i]) < 1e-6);
            CHECK(std::abs(fs.normal_z[i] - base.normal_z[i]) < 1e-6);
            CHECK(fs.eigenvalues[i][0] == doctest::Approx(s * s * base.eigenvalues[i][0]).epsilon(1e-9));
        }
    }
}

TEST_CASE("append_local_features")
{
    const PointCloud cloud(random_points(300, 9));
    const auto f = features_of(cloud);
    const auto two = append_local_features(cloud, f);
    CHECK(two.feature_names() == std::vector<std::string>{"planarity", "normal_z"});
    const auto four = append_local_features(cloud, f, true);
    CHECK(four.feature_names() == std::vector<std::string>{"planarity", "normal_z", "linearity", "omnivariance"});
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(four.feature("planarity")[i] == static_cast<float>(f.planarity[i]));
        CHECK(four.feature("omnivariance")[i] == static_cast<float>(f.omnivariance[i]));
    }
    CHECK_THROWS_AS(append_local_features(PointCloud(random_points(10, 1)), f), std::invalid_argument);

    const auto path = std::filesystem::temp_directory_path() / ("terrafeat_lf_" + std::to_string(::getpid()) + ".ply");
    save_cloud(four, path, SaveFormat::ply_binary);
    const auto back = load_cloud(path);
    std::filesystem::remove(path);
    for (const auto& name : four.feature_names())
        CHECK(back.feature(name) == four.feature(name));
}
