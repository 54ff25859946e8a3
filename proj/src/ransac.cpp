#include "terrafeat/error.hpp"
#include "terrafeat/ground.hpp"
#include "terrafeat/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

namespace terrafeat {
namespace {

std::size_t count_inliers(const std::vector<Point3>& pts, double a, double b, double c, double thr)
{
    std::size_t n = 0;
    for (const auto& p : pts)
        n += std::abs(p.z - (a * p.x + b * p.y + c)) <= thr;
    return n;
}

} // namespace

Plane ransac_ground_plane(const PointCloud& cloud, double inlier_threshold, std::size_t iterations,
                          std::uint64_t seed)
{
    if (cloud.size() < 3)
        throw std::invalid_argument("RANSAC plane needs at least 3 points");
    if (iterations < 1)
        throw std::invalid_argument("RANSAC needs at least one iteration");
    if (!(inlier_threshold > 0.0))
        throw std::invalid_argument("RANSAC inlier threshold must be positive");

    const auto& pts = cloud.positions();
    std::mt19937_64 rng(derive_seed(seed, SeedStream::ransac));
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);

    // Centering keeps the 3-point solve well conditioned for georeferenced
    // coordinates; the plane is converted back at the end.
    const Point3 o = pts.front();

    bool found = false;
    double best_a = 0, best_b = 0, best_c = 0;
    std::size_t best_inliers = 0;
    const std::size_t max_draws = 100 * iterations + 1000;
    std::size_t draws = 0;
    for (std::size_t it = 0; it < iterations && draws < max_draws;) {
        ++draws;
        const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
        if (i == j || j == k || i == k)
            continue;
        const Eigen::Vector3d p0(pts[i].x - o.x, pts[i].y - o.y, pts[i].z - o.z);
        const Eigen::Vector3d p1(pts[j].x - o.x, pts[j].y - o.y, pts[j].z - o.z);
        const Eigen::Vector3d p2(pts[k].x - o.x, pts[k].y - o.y, pts[k].z - o.z);
        const Eigen::Vector3d n = (p1 - p0).cross(p2 - p0);
        const double norm = n.norm();
        if (0.5 * norm < 1e-6)
            continue; // degenerate triple, redraw
        ++it;
        if (std::abs(n.z()) / norm < 0.5)
            continue; // too steep to be ground
        const double a = -n.x() / n.z();
        const double b = -n.y() / n.z();
        const double c_local = p0.z() - a * p0.x() - b * p0.y();
        const double c = c_local + o.z - a * o.x - b * o.y;
        const std::size_t inliers = count_inliers(pts, a, b, c, inlier_threshold);
        if (!found || inliers > best_inliers) {
            found = true;
            best_inliers = inliers;
            best_a = a;
            best_b = b;
            best_c = c;
        }
    }
    if (!found || best_inliers < 3)
        throw NumericalError("RANSAC found no valid ground plane hypothesis");

    // Least-squares refit on the inliers of the best hypothesis.
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atz = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
        if (std::abs(p.z - (best_a * p.x + best_b * p.y + best_c)) > inlier_threshold)
            continue;
        const Eigen::Vector3d row(p.x - o.x, p.y - o.y, 1.0);
        ata += row * row.transpose();
        atz += row * (p.z - o.z);
    }
    Plane plane;
    plane.inlier_threshold = inlier_threshold;
    const Eigen::Vector3d sol = ata.ldlt().solve(atz);
    if (sol.allFinite() && (ata * sol - atz).norm() <= 1e-6 * std::max(1.0, atz.norm())) {
        plane.a = sol.x();
        plane.b = sol.y();
        plane.c = sol.z() + o.z - plane.a * o.x - plane.b * o.y;
    } else {
        // Inliers degenerate in x/y (e.g. all on a line): keep the hypothesis.
        plane.a = best_a;
        plane.b = best_b;
        plane.c = best_c;
    }
    plane.inlier_count = count_inliers(pts, plane.a, plane.b, plane.c, inlier_threshold);
    return plane;
}

RasterGrid plane_raster(const Plane& plane, const RasterGeometry& geometry)
{
    RasterGrid out(geometry, 0.0);
    for (std::size_t row = 0; row < geometry.height; ++row)
        for (std::size_t col = 0; col < geometry.width; ++col)
            out.set(row, col, plane.height(geometry.center_x(col), geometry.center_y(row)));
    return out;
}

} // namespace terrafeat
