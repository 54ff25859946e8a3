#include "terrafeat/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace terrafeat {

bool is_reserved_column_name(std::string_view name)
{
    static constexpr std::array<std::string_view, 7> reserved{"x", "y", "z", "red", "green",
                                                              "blue", "class"};
    return std::find(reserved.begin(), reserved.end(), name) != reserved.end();
}

PointCloud::PointCloud(std::vector<Point3> positions) : positions_(std::move(positions)) {}

void PointCloud::set_colors(std::vector<Rgb> colors)
{
    if (colors.size() != positions_.size())
        throw std::invalid_argument("color column length does not match point count");
    colors_ = std::move(colors);
    colors_flag_ = true;
}

void PointCloud::clear_colors()
{
    colors_.clear();
    colors_flag_ = false;
}

void PointCloud::set_labels(std::vector<Label> labels)
{
    if (labels.size() != positions_.size())
        throw std::invalid_argument("label column length does not match point count");
    labels_ = std::move(labels);
    labels_flag_ = true;
}

void PointCloud::clear_labels()
{
    labels_.clear();
    labels_flag_ = false;
}

bool PointCloud::has_feature(std::string_view name) const
{
    return std::any_of(features_.begin(), features_.end(),
                       [&](const auto& f) { return f.first == name; });
}

const PointCloud::FeatureColumn& PointCloud::feature(std::string_view name) const
{
    for (const auto& [n, col] : features_)
        if (n == name)
            return col;
    throw std::invalid_argument("no feature column named '" + std::string(name) + "'");
}

bool PointCloud::set_feature(std::string name, FeatureColumn values)
{
    if (name.empty())
        throw std::invalid_argument("feature name must be nonempty");
    if (std::any_of(name.begin(), name.end(),
                    [](unsigned char c) { return std::isspace(c) || c == ','; }))
        throw std::invalid_argument("feature name '" + name + "' contains whitespace or commas");
    if (is_reserved_column_name(name))
        throw std::invalid_argument("feature name '" + name + "' is reserved");
    if (values.size() != positions_.size())
        throw std::invalid_argument("feature column '" + name + "' length does not match point count");
    for (auto& [n, col] : features_) {
        if (n == name) {
            col = std::move(values);
            return true;
        }
    }
    features_.emplace_back(std::move(name), std::move(values));
    return false;
}

bool PointCloud::remove_feature(std::string_view name)
{
    const auto it = std::find_if(features_.begin(), features_.end(),
                                 [&](const auto& f) { return f.first == name; });
    if (it == features_.end())
        return false;
    features_.erase(it);
    return true;
}

std::vector<std::string> PointCloud::feature_names() const
{
    std::vector<std::string> names;
    names.reserve(features_.size());
    for (const auto& f : features_)
        names.push_back(f.first);
    return names;
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const
{
    auto gather = [&](const auto& column) {
        std::remove_cvref_t<decltype(column)> out;
        out.reserve(indices.size());
        for (std::size_t i : indices)
            out.push_back(column.at(i));
        return out;
    };
    PointCloud out(gather(positions_));
    if (has_colors())
        out.set_colors(gather(colors_));
    if (has_labels())
        out.set_labels(gather(labels_));
    for (const auto& [name, col] : features_)
        out.features_.emplace_back(name, gather(col));
    return out;
}

BoundingBox compute_bbox(const PointCloud& cloud)
{
    if (cloud.empty())
        throw std::invalid_argument("bounding box of an empty cloud");
    const auto& pts = cloud.positions();
    BoundingBox box{pts.front(), pts.front()};
    for (const auto& p : pts) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.min.z = std::min(box.min.z, p.z);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
        box.max.z = std::max(box.max.z, p.z);
    }
    return box;
}

PointCloud grid_subsample(const PointCloud& cloud, double cell)
{
    if (!(cell > 0.0) || !std::isfinite(cell))
        throw std::invalid_argument("grid_subsample: cell must be positive");
    if (cloud.empty())
        return cloud;

    const BoundingBox box = compute_bbox(cloud);
    const Point3 anchor{std::floor(box.min.x / cell) * cell, std::floor(box.min.y / cell) * cell,
                        std::floor(box.min.z / cell) * cell};
    using Key = std::array<std::int64_t, 3>;
    const auto& pts = cloud.positions();
    std::vector<Key> keys(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        keys[i] = {static_cast<std::int64_t>(std::floor((pts[i].x - anchor.x) / cell)),
                   static_cast<std::int64_t>(std::floor((pts[i].y - anchor.y) / cell)),
                   static_cast<std::int64_t>(std::floor((pts[i].z - anchor.z) / cell))};
    }
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(keys[a], a) < std::tie(keys[b], b);
    });

    auto center_dist2 = [&](std::size_t i) {
        const Key& k = keys[i];
        const double cx = anchor.x + (static_cast<double>(k[0]) + 0.5) * cell;
        const double cy = anchor.y + (static_cast<double>(k[1]) + 0.5) * cell;
        const double cz = anchor.z + (static_cast<double>(k[2]) + 0.5) * cell;
        const double dx = pts[i].x - cx, dy = pts[i].y - cy, dz = pts[i].z - cz;
        return dx * dx + dy * dy + dz * dz;
    };

    std::vector<std::size_t> kept;
    for (std::size_t run = 0; run < order.size();) {
        std::size_t best = order[run];
        double best_d = center_dist2(best);
        std::size_t next = run + 1;
        for (; next < order.size() && keys[order[next]] == keys[order[run]]; ++next) {
            const double d = center_dist2(order[next]);
            // Indices within a run ascend, so strict < keeps the lowest on ties.
            if (d < best_d) {
                best_d = d;
                best = order[next];
            }
        }
        kept.push_back(best);
        run = next;
    }
    std::sort(kept.begin(), kept.end());
    return cloud.select(kept);
}

} // namespace terrafeat
