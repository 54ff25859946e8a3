#include "terrafeat/local_features.hpp"

#include "terrafeat/log.hpp"
#include "terrafeat/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace terrafeat {

StructureTensor structure_tensor(std::span<const Point3> points, std::span<const Neighbor> neighbors)
{
    StructureTensor t;
    t.minor_axis = {0.0, 0.0, 1.0};
    if (neighbors.empty())
        return t;
    double cx = 0.0, cy = 0.0, cz = 0.0;
    for (const auto& n : neighbors) {
        const Point3& p = points[n.index];
        cx += p.x;
        cy += p.y;
        cz += p.z;
    }
    const double inv = 1.0 / static_cast<double>(neighbors.size());
    cx *= inv;
    cy *= inv;
    cz *= inv;
    double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
    for (const auto& n : neighbors) {
        const Point3& p = points[n.index];
        const double dx = p.x - cx, dy = p.y - cy, dz = p.z - cz;
        xx += dx * dx;
        xy += dx * dy;
        xz += dx * dz;
        yy += dy * dy;
        yz += dy * dz;
        zz += dz * dz;
    }
    Eigen::Matrix3d cov;
    cov << xx, xy, xz, xy, yy, yz, xz, yz, zz;
    cov *= inv;

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const auto& ev = solver.eigenvalues(); // ascending
    t.eigenvalues = {std::max(0.0, ev(2)), std::max(0.0, ev(1)), std::max(0.0, ev(0))};
    const Eigen::Vector3d v = solver.eigenvectors().col(0);
    t.minor_axis = {v.x(), v.y(), v.z()};
    return t;
}

LocalFeatureSet structure_tensor_features(const PointCloud& cloud, const NeighborIndex& index,
                                          std::size_t k_planarity, std::size_t k_normal)
{
    if (cloud.size() < 3)
        throw std::invalid_argument("local features need at least 3 points");
    if (k_planarity < 3 || k_normal < 3)
        throw std::invalid_argument("local features need k >= 3");
    if (index.size() != cloud.size())
        throw std::invalid_argument("neighbor index was built for a different cloud");

    const std::size_t n = cloud.size();
    LocalFeatureSet out;
    out.eigenvalues.resize(n);
    out.planarity.resize(n);
    out.normal_z.resize(n);
    out.linearity.resize(n);
    out.omnivariance.resize(n);
    const auto& pts = cloud.positions();
    const std::size_t k_max = std::max(k_planarity, k_normal);

    detail::parallel_ranges(n, [&](std::size_t lo, std::size_t hi) {
        std::vector<Neighbor> nbrs;
        for (std::size_t i = lo; i < hi; ++i) {
            index.knn(pts[i], k_max, nbrs);
            const std::span<const Neighbor> all(nbrs);
            const StructureTensor small = structure_tensor(pts, all.first(std::min(k_planarity, all.size())));
            const StructureTensor large = structure_tensor(pts, all.first(std::min(k_normal, all.size())));
            const auto& l = small.eigenvalues;
            out.eigenvalues[i] = l;
            if (l[0] <= kDegenerateEigenvalue) {
                out.planarity[i] = 0.0;
                out.linearity[i] = 0.0;
                out.omnivariance[i] = 0.0;
            } else {
                out.planarity[i] = (l[1] - l[2]) / l[0];
                out.linearity[i] = (l[0] - l[1]) / l[0];
                out.omnivariance[i] = std::cbrt(l[0] * l[1] * l[2]);
            }
            out.normal_z[i] = large.eigenvalues[0] <= kDegenerateEigenvalue
                                  ? 1.0
                                  : std::min(1.0, std::abs(large.minor_axis[2]));
        }
    }, 1024);
    return out;
}

PointCloud append_local_features(PointCloud cloud, const LocalFeatureSet& features, bool include_extras)
{
    if (features.size() != cloud.size())
        throw std::invalid_argument("local feature count does not match point count");
    auto to_float = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
    auto put = [&](const char* name, const std::vector<double>& v) {
        if (cloud.set_feature(name, to_float(v)))
            log::warn(std::string("feature column '") + name + "' overwritten");
    };
    put(kPlanarity, features.planarity);
    put(kNormalZ, features.normal_z);
    if (include_extras) {
        put(kLinearity, features.linearity);
        put(kOmnivariance, features.omnivariance);
    }
    return cloud;
}

} // namespace terrafeat
