#pragma once

#include "terrafeat/point_cloud.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>

namespace terrafeat {

enum class CloudFormat { ply, xyz, csv };
enum class SaveFormat { ply_ascii, ply_binary, csv };

enum class NonFinitePolicy {
    drop,  ///< skip the point and warn with the dropped count
    reject ///< throw IoError
};

struct LoadOptions {
    std::optional<CloudFormat> format; ///< overrides extension-based detection
    NonFinitePolicy non_finite = NonFinitePolicy::drop;
};

struct LoadResult {
    PointCloud cloud;
    std::size_t dropped_non_finite = 0;
};

/**
 * Reads PLY (ascii, binary little/big endian), whitespace-separated XYZ or
 * comma-separated CSV. PLY vertex properties x/y/z become positions,
 * red/green/blue colors, "class" labels, and every other scalar property a
 * feature column in file order.
 *
 * Text files accept an optional header line naming the columns. Without a
 * header the layout is positional: x y z [r g b [class [features...]]];
 * unnamed feature columns are called scalar_0, scalar_1, ...
 */
LoadResult load_cloud_with_report(const std::filesystem::path& path, const LoadOptions& options = {});

PointCloud load_cloud(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes all columns. Positions are float64, colors and labels uchar,
/// features float32. Float values in text formats use shortest round-trip
/// notation.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, SaveFormat format);

} // namespace terrafeat
