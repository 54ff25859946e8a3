#pragma once

#include "terrafeat/cloud_io.hpp"
#include "terrafeat/ground.hpp"
#include "terrafeat/point_cloud.hpp"
#include "terrafeat/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace terrafeat {

enum class GroundMode { spline, ransac };

enum class Feature { h_r, planarity, normal_z, nu, sigma_z, extras };

inline constexpr const char* kPointCount = "nu";
inline constexpr const char* kElevationVariance = "sigma_z";

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path output;
    double dsm_cell = 0.25;
    double min_filter_radius = 0.0; ///< required for ground_mode=spline
    double min_filter_tol = 0.25;
    SplineConfig spline;
    std::size_t k_planarity = 10;
    std::size_t k_normal = 100;
    GroundMode ground_mode = GroundMode::spline;
    RelzMode relz_mode = RelzMode::cell;
    std::optional<double> subsample_cell;
    std::set<Feature> features{Feature::h_r, Feature::planarity, Feature::normal_z, Feature::nu,
                               Feature::sigma_z};
    std::uint64_t seed = 0;
    std::filesystem::path mask; ///< optional raster; nonzero cells never become ground candidates
    std::size_t dsm_points = 4;
    double inpaint_tol = 1e-4;
    std::size_t inpaint_max_iter = 10000;
    double ransac_threshold = 0.2;
    std::size_t ransac_iterations = 1000;
    SaveFormat output_format = SaveFormat::ply_binary;

    bool wants(Feature f) const { return features.count(f) != 0; }
    /// Throws std::invalid_argument. Paths are only checked when
    /// `require_paths` is set.
    void validate(bool require_paths = true) const;
};

/// Sets one field from its textual form. Keys are the field names above;
/// spline fields are addressed without prefix (lambda, epsilon, node_cell,
/// irls_iters, irls_delta, cg_tol, cg_max_iter, data_term,
/// multilevel_init). Throws std::invalid_argument for unknown keys or bad
/// values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);
const std::vector<std::string>& setting_keys();

/// Parses "key = value" lines; blank lines and lines starting with '#'
/// are skipped. Later duplicates win.
std::map<std::string, std::string> parse_settings(std::string_view text);
std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path);
/// All settings of `config` in the form accepted by parse_settings.
std::string format_settings(const PipelineConfig& config);

std::string feature_name(Feature f);
/// Comma-separated list of feature names. Throws on unknown names.
std::set<Feature> parse_features(std::string_view list);

/// Failure inside a pipeline stage. `kind` follows the originating error.
class StageError : public std::runtime_error {
public:
    enum class Kind { usage, io, numerical, internal };
    StageError(std::string stage, Kind kind, const std::string& message);
    const std::string& stage() const noexcept { return stage_; }
    Kind kind() const noexcept { return kind_; }

private:
    std::string stage_;
    Kind kind_;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct PipelineResult {
    PointCloud cloud;
    RasterGrid dsm;    ///< inpainted
    RasterGrid dtm;
    RasterGrid ndsm;
    RasterGrid ground; ///< candidate mask (spline mode only)
    std::optional<Plane> plane;
    std::size_t input_points = 0;
    std::vector<StageTiming> timings;
    double total_seconds = 0.0;
    std::size_t warnings = 0;
    std::vector<std::filesystem::path> written;
};

/// DSM, ground, h_r and the requested features on an in-memory cloud.
/// Reads cfg.mask when set; writes nothing.
PipelineResult process_cloud(PointCloud cloud, const PipelineConfig& config);

/// Full run: load, process, save the augmented cloud to cfg.output and the
/// dsm/dtm/ndsm (and ground mask) rasters beside it.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Only the requested features; the ground stages run only for h_r and no
/// rasters are written.
PipelineResult run_features(const PipelineConfig& config);

/// "<dir>/<stem>_<layer>.asc" next to the cloud output.
std::filesystem::path raster_output_path(const std::filesystem::path& output, const std::string& layer);

std::string format_summary(const PipelineResult& result);

} // namespace terrafeat
