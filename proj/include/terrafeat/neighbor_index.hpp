#pragma once

#include "terrafeat/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace terrafeat {

struct Neighbor {
    std::uint32_t index = 0; ///< position in the indexed cloud
    double dist2 = 0.0;      ///< squared Euclidean distance to the query
};

/**
 * Exact k-nearest-neighbour search over 3D points (median-split k-d tree).
 * The tree keeps its own reordered copy of the coordinates; indices in the
 * results refer to the original order.
 */
class NeighborIndex {
public:
    explicit NeighborIndex(std::span<const Point3> points, std::size_t leaf_size = 12);

    std::size_t size() const noexcept { return order_.size(); }

    /// The min(k, size()) points closest to `query`, sorted by
    /// (distance, index). A query located at an indexed point returns that
    /// point first.
    void knn(const Point3& query, std::size_t k, std::vector<Neighbor>& out) const;
    std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

private:
    struct Node {
        std::uint32_t begin;
        std::uint32_t end;
        std::int32_t left = -1; ///< -1 for leaves
        std::int32_t right = -1;
        int axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size);
    void search(std::int32_t node, const double q[3], std::size_t k, std::vector<Neighbor>& heap) const;

    std::vector<std::uint32_t> order_; ///< tree slot -> original index
    std::vector<double> coords_;       ///< xyz per tree slot
    std::vector<Node> nodes_;
};

/// Throws std::invalid_argument for an empty cloud.
NeighborIndex build_neighbor_index(const PointCloud& cloud);

} // namespace terrafeat
