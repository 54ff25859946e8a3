#include "terrafeat/neighbor_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace terrafeat {
namespace {

bool closer(const Neighbor& a, const Neighbor& b)
{
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

} // namespace

NeighborIndex::NeighborIndex(std::span<const Point3> points, std::size_t leaf_size)
{
    if (points.empty())
        throw std::invalid_argument("neighbor index over an empty point set");
    if (points.size() >= std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("neighbor index supports fewer than 2^32 points");
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    coords_.resize(points.size() * 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
        coords_[3 * i] = points[i].x;
        coords_[3 * i + 1] = points[i].y;
        coords_[3 * i + 2] = points[i].z;
    }
    nodes_.reserve(2 * points.size() / std::max<std::size_t>(1, leaf_size) + 1);
    build(0, static_cast<std::uint32_t>(points.size()), std::max<std::size_t>(1, leaf_size));

    // Lay coordinates out in tree order so leaves scan contiguous memory.
    std::vector<double> sorted(coords_.size());
    for (std::size_t s = 0; s < order_.size(); ++s)
        for (int d = 0; d < 3; ++d)
            sorted[3 * s + d] = coords_[3 * order_[s] + d];
    coords_ = std::move(sorted);
}

std::int32_t NeighborIndex::build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size)
{
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= leaf_size)
        return id;

    double lo[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
    double hi[3] = {-lo[0], -lo[1], -lo[2]};
    for (std::uint32_t s = begin; s < end; ++s)
        for (int d = 0; d < 3; ++d) {
            const double v = coords_[3 * order_[s] + d];
            lo[d] = std::min(lo[d], v);
            hi[d] = std::max(hi[d], v);
        }
    int axis = 0;
    for (int d = 1; d < 3; ++d)
        if (hi[d] - lo[d] > hi[axis] - lo[axis])
            axis = d;
    if (hi[axis] == lo[axis])
        return id; // all coincident: keep as one leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         return coords_[3 * a + axis] < coords_[3 * b + axis];
                     });
    const double split = coords_[3 * order_[mid] + axis];
    const std::int32_t left = build(begin, mid, leaf_size);
    const std::int32_t right = build(mid, end, leaf_size);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

void NeighborIndex::search(std::int32_t id, const double q[3], std::size_t k, std::vector<Neighbor>& heap) const
{
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
        for (std::uint32_t s = node.begin; s < node.end; ++s) {
            const double* p = coords_.data() + 3 * s;
            const double dx = p[0] - q[0];
            const double dy = p[1] - q[1];
            const double dz = p[2] - q[2];
            const Neighbor cand{order_[s], dx * dx + dy * dy + dz * dz};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), closer);
            } else if (closer(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), closer);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), closer);
            }
        }
        return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[node.axis] - node.split;
    const std::int32_t near = diff < 0 ? node.left : node.right;
    const std::int32_t far = diff < 0 ? node.right : node.left;
    search(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().dist2)
        search(far, q, k, heap);
}

void NeighborIndex::knn(const Point3& query, std::size_t k, std::vector<Neighbor>& out) const
{
    out.clear();
    k = std::min(k, size());
    if (k == 0)
        return;
    out.reserve(k);
    const double q[3] = {query.x, query.y, query.z};
    search(0, q, k, out);
    std::sort_heap(out.begin(), out.end(), closer);
}

std::vector<Neighbor> NeighborIndex::knn(const Point3& query, std::size_t k) const
{
    std::vector<Neighbor> out;
    knn(query, k, out);
    return out;
}

NeighborIndex build_neighbor_index(const PointCloud& cloud)
{
    return NeighborIndex(cloud.positions());
}

} // namespace terrafeat
