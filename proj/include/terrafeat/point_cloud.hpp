#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace terrafeat {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

using Label = std::uint8_t;
inline constexpr Label kUnlabeled = 255;
inline constexpr std::string_view kLabelColumn = "class";

/// True for names that collide with the fixed PLY/CSV columns
/// (x, y, z, red, green, blue, class).
bool is_reserved_column_name(std::string_view name);

/**
 * Columnar point store. Positions are always present; colors and labels
 * are optional; feature columns are single-precision and keep insertion
 * order. Every present column has size() entries.
 */
class PointCloud {
public:
    using FeatureColumn = std::vector<float>;

    PointCloud() = default;
    explicit PointCloud(std::vector<Point3> positions);

    std::size_t size() const noexcept { return positions_.size(); }
    bool empty() const noexcept { return positions_.empty(); }

    const std::vector<Point3>& positions() const noexcept { return positions_; }

    bool has_colors() const noexcept { return colors_flag_; }
    const std::vector<Rgb>& colors() const noexcept { return colors_; }
    void set_colors(std::vector<Rgb> colors);
    void clear_colors();

    bool has_labels() const noexcept { return labels_flag_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    void set_labels(std::vector<Label> labels);
    void clear_labels();

    bool has_feature(std::string_view name) const;
    /// Throws std::invalid_argument when the column does not exist.
    const FeatureColumn& feature(std::string_view name) const;
    /// Adds or replaces a column. Returns true when an existing column was
    /// replaced. Names must be nonempty, whitespace-free and not reserved.
    bool set_feature(std::string name, FeatureColumn values);
    bool remove_feature(std::string_view name);
    std::vector<std::string> feature_names() const;
    const std::vector<std::pair<std::string, FeatureColumn>>& features() const noexcept
    {
        return features_;
    }

    /// New cloud holding the listed points (all columns) in the given order.
    PointCloud select(std::span<const std::size_t> indices) const;

private:
    std::vector<Point3> positions_;
    std::vector<Rgb> colors_;
    std::vector<Label> labels_;
    bool colors_flag_ = false;
    bool labels_flag_ = false;
    std::vector<std::pair<std::string, FeatureColumn>> features_;
};

struct BoundingBox {
    Point3 min;
    Point3 max;

    bool contains(const Point3& p) const noexcept
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
};

/// Tight componentwise bounds. Throws std::invalid_argument on an empty cloud.
BoundingBox compute_bbox(const PointCloud& cloud);

/**
 * Keeps at most one point per occupied voxel of edge `cell`. The voxel
 * lattice is anchored at floor(bbox.min / cell) * cell per axis, so the
 * result is deterministic and subsampling twice is the identity. The kept
 * point is the one closest to the voxel center (lowest original index on
 * ties); output order follows the original indices.
 */
PointCloud grid_subsample(const PointCloud& cloud, double cell);

} // namespace terrafeat
