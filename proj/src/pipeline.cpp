#include "terrafeat/pipeline.hpp"

#include "terrafeat/error.hpp"
#include "terrafeat/local_features.hpp"
#include "terrafeat/log.hpp"
#include "terrafeat/neighbor_index.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace terrafeat {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected)
{
    throw std::invalid_argument("setting '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                                expected);
}

double to_double(std::string_view key, std::string_view value)
{
    value = trim(value);
    double out = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(out))
        bad_value(key, value, "a finite number");
    return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view value)
{
    value = trim(value);
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || end != value.data() + value.size())
        bad_value(key, value, "a non-negative integer");
    return out;
}

bool to_bool(std::string_view key, std::string_view value)
{
    const std::string v = lower(trim(value));
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    bad_value(key, value, "a boolean");
}

std::string fmt(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

// ---------------------------------------------------------------------------
// Settings

void PipelineConfig::validate(bool require_paths) const
{
    if (require_paths && (input.empty() || output.empty()))
        throw std::invalid_argument("input and output paths are required");
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string(name) + " must be positive");
    };
    positive(dsm_cell, "dsm_cell");
    if (ground_mode == GroundMode::spline) {
        if (!(min_filter_radius > 0.0))
            throw std::invalid_argument("min_filter_radius is required (positive, in meters) for ground_mode=spline");
        if (min_filter_radius < dsm_cell)
            throw std::invalid_argument("min_filter_radius must be at least dsm_cell");
        if (!(min_filter_tol >= 0.0))
            throw std::invalid_argument("min_filter_tol must be non-negative");
        spline.validate();
    } else {
        positive(ransac_threshold, "ransac_threshold");
        if (ransac_iterations == 0)
            throw std::invalid_argument("ransac_iterations must be positive");
    }
    if (subsample_cell)
        positive(*subsample_cell, "subsample_cell");
    if (k_planarity < 3 || k_normal < 3)
        throw std::invalid_argument("k_planarity and k_normal must be at least 3");
    if (dsm_points == 0)
        throw std::invalid_argument("dsm_points must be positive");
    positive(inpaint_tol, "inpaint_tol");
    if (inpaint_max_iter == 0)
        throw std::invalid_argument("inpaint_max_iter must be positive");
}

std::string feature_name(Feature f)
{
    switch (f) {
    case Feature::h_r: return "h_r";
    case Feature::planarity: return "planarity";
    case Feature::normal_z: return "normal_z";
    case Feature::nu: return "nu";
    case Feature::sigma_z: return "sigma_z";
    case Feature::extras: return "extras";
    }
    return "?";
}

std::set<Feature> parse_features(std::string_view list)
{
    static const Feature all[] = {Feature::h_r, Feature::planarity, Feature::normal_z,
                                  Feature::nu, Feature::sigma_z, Feature::extras};
    std::set<Feature> out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = std::min(list.find(',', pos), list.size());
        const std::string name = lower(trim(list.substr(pos, comma - pos)));
        pos = comma + 1;
        if (name.empty())
            continue;
        if (name == "all") {
            out.insert(std::begin(all), std::end(all));
            continue;
        }
        const auto it = std::find_if(std::begin(all), std::end(all),
                                     [&](Feature f) { return feature_name(f) == name; });
        if (it == std::end(all))
            throw std::invalid_argument("unknown feature '" + name +
                                        "' (expected h_r, planarity, normal_z, nu, sigma_z, extras or all)");
        out.insert(*it);
    }
    return out;
}

const std::vector<std::string>& setting_keys()
{
    static const std::vector<std::string> keys = {
        "input",          "output",        "dsm_cell",       "min_filter_radius", "min_filter_tol",
        "lambda",         "epsilon",       "node_cell",      "irls_iters",        "irls_delta",
        "cg_tol",         "cg_max_iter",   "data_term",      "multilevel_init",   "k_planarity",
        "k_normal",       "ground_mode",   "relz_mode",      "subsample_cell",    "features",
        "seed",           "mask",          "dsm_points",     "inpaint_tol",       "inpaint_max_iter",
        "ransac_threshold", "ransac_iterations", "output_format"};
    return keys;
}

void apply_setting(PipelineConfig& c, std::string_view key_in, std::string_view raw)
{
    const std::string key = lower(trim(key_in));
    const std::string_view value = trim(raw);
    const std::string v = lower(value);
    if (key == "input")
        c.input = std::string(value);
    else if (key == "output")
        c.output = std::string(value);
    else if (key == "dsm_cell")
        c.dsm_cell = to_double(key, value);
    else if (key == "min_filter_radius")
        c.min_filter_radius = to_double(key, value);
    else if (key == "min_filter_tol")
        c.min_filter_tol = to_double(key, value);
    else if (key == "lambda")
        c.spline.lambda = to_double(key, value);
    else if (key == "epsilon")
        c.spline.epsilon = to_double(key, value);
    else if (key == "node_cell")
        c.spline.node_cell = to_double(key, value);
    else if (key == "irls_iters")
        c.spline.irls_iters = to_uint(key, value);
    else if (key == "irls_delta")
        c.spline.irls_delta = to_double(key, value);
    else if (key == "cg_tol")
        c.spline.cg_tol = to_double(key, value);
    else if (key == "cg_max_iter")
        c.spline.cg_max_iter = to_uint(key, value);
    else if (key == "data_term") {
        if (v == "l1")
            c.spline.data_term = DataTerm::l1;
        else if (v == "l2")
            c.spline.data_term = DataTerm::l2;
        else
            bad_value(key, value, "l1 or l2");
    } else if (key == "multilevel_init")
        c.spline.multilevel_init = to_bool(key, value);
    else if (key == "k_planarity")
        c.k_planarity = to_uint(key, value);
    else if (key == "k_normal")
        c.k_normal = to_uint(key, value);
    else if (key == "ground_mode") {
        if (v == "spline")
            c.ground_mode = GroundMode::spline;
        else if (v == "ransac")
            c.ground_mode = GroundMode::ransac;
        else
            bad_value(key, value, "spline or ransac");
    } else if (key == "relz_mode") {
        if (v == "cell")
            c.relz_mode = RelzMode::cell;
        else if (v == "bilinear")
            c.relz_mode = RelzMode::bilinear;
        else
            bad_value(key, value, "cell or bilinear");
    } else if (key == "subsample_cell") {
        if (v.empty() || v == "none" || v == "off")
            c.subsample_cell.reset();
        else
            c.subsample_cell = to_double(key, value);
    } else if (key == "features")
        c.features = parse_features(value);
    else if (key == "seed")
        c.seed = to_uint(key, value);
    else if (key == "mask")
        c.mask = std::string(value);
    else if (key == "dsm_points")
        c.dsm_points = to_uint(key, value);
    else if (key == "inpaint_tol")
        c.inpaint_tol = to_double(key, value);
    else if (key == "inpaint_max_iter")
        c.inpaint_max_iter = to_uint(key, value);
    else if (key == "ransac_threshold")
        c.ransac_threshold = to_double(key, value);
    else if (key == "ransac_iterations")
        c.ransac_iterations = to_uint(key, value);
    else if (key == "output_format") {
        if (v == "ply" || v == "ply_binary")
            c.output_format = SaveFormat::ply_binary;
        else if (v == "ply_ascii")
            c.output_format = SaveFormat::ply_ascii;
        else if (v == "csv")
            c.output_format = SaveFormat::csv;
        else
            bad_value(key, value, "ply_binary, ply_ascii or csv");
    } else
        throw std::invalid_argument("unknown setting '" + std::string(key_in) + "'");
}

std::map<std::string, std::string> parse_settings(std::string_view text)
{
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        const std::string_view line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = lower(trim(line.substr(0, eq)));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        out[key] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

std::map<std::string, std::string> read_settings_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_settings(ss.str());
}

std::string format_settings(const PipelineConfig& c)
{
    std::string features;
    for (Feature f : c.features) {
        if (!features.empty())
            features += ',';
        features += feature_name(f);
    }
    const char* format = c.output_format == SaveFormat::ply_binary ? "ply_binary"
                         : c.output_format == SaveFormat::ply_ascii ? "ply_ascii"
                                                                    : "csv";
    std::ostringstream o;
    o << "input = " << c.input.string() << '\n'
      << "output = " << c.output.string() << '\n'
      << "dsm_cell = " << fmt(c.dsm_cell) << '\n'
      << "min_filter_radius = " << fmt(c.min_filter_radius) << '\n'
      << "min_filter_tol = " << fmt(c.min_filter_tol) << '\n'
      << "lambda = " << fmt(c.spline.lambda) << '\n'
      << "epsilon = " << fmt(c.spline.epsilon) << '\n'
      << "node_cell = " << fmt(c.spline.node_cell) << '\n'
      << "irls_iters = " << c.spline.irls_iters << '\n'
      << "irls_delta = " << fmt(c.spline.irls_delta) << '\n'
      << "cg_tol = " << fmt(c.spline.cg_tol) << '\n'
      << "cg_max_iter = " << c.spline.cg_max_iter << '\n'
      << "data_term = " << (c.spline.data_term == DataTerm::l1 ? "l1" : "l2") << '\n'
      << "multilevel_init = " << (c.spline.multilevel_init ? "true" : "false") << '\n'
      << "k_planarity = " << c.k_planarity << '\n'
      << "k_normal = " << c.k_normal << '\n'
      << "ground_mode = " << (c.ground_mode == GroundMode::spline ? "spline" : "ransac") << '\n'
      << "relz_mode = " << (c.relz_mode == RelzMode::cell ? "cell" : "bilinear") << '\n'
      << "subsample_cell = " << (c.subsample_cell ? fmt(*c.subsample_cell) : std::string("none")) << '\n'
      << "features = " << features << '\n'
      << "seed = " << c.seed << '\n'
      << "mask = " << c.mask.string() << '\n'
      << "dsm_points = " << c.dsm_points << '\n'
      << "inpaint_tol = " << fmt(c.inpaint_tol) << '\n'
      << "inpaint_max_iter = " << c.inpaint_max_iter << '\n'
      << "ransac_threshold = " << fmt(c.ransac_threshold) << '\n'
      << "ransac_iterations = " << c.ransac_iterations << '\n'
      << "output_format = " << format << '\n';
    return o.str();
}

// ---------------------------------------------------------------------------
// Stages

StageError::StageError(std::string stage, Kind kind, const std::string& message)
    : std::runtime_error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)), kind_(kind)
{
}

namespace {

using Clock = std::chrono::steady_clock;

class StageRunner {
public:
    explicit StageRunner(PipelineResult& result) : result_(result) {}

    template <typename F>
    void operator()(const char* name, F&& body)
    {
        const auto t0 = Clock::now();
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw StageError(name, StageError::Kind::usage, e.what());
        } catch (const IoError& e) {
            throw StageError(name, StageError::Kind::io, e.what());
        } catch (const NumericalError& e) {
            throw StageError(name, StageError::Kind::numerical, e.what());
        } catch (const std::exception& e) {
            throw StageError(name, StageError::Kind::internal, e.what());
        }
        result_.timings.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
    }

private:
    PipelineResult& result_;
};

struct Options {
    bool ground = true;      ///< DSM, DTM and ndsm
    bool force_h_r = true;
};

void process(PointCloud cloud, const PipelineConfig& cfg, const Options& opt, PipelineResult& r,
             StageRunner& stage)
{
    r.input_points = cloud.size();
    if (cfg.subsample_cell)
        stage("subsample", [&] { cloud = grid_subsample(cloud, *cfg.subsample_cell); });

    CellIndexMap index;
    stage("cell index", [&] { index = build_cell_index(cloud, cfg.dsm_cell, compute_bbox(cloud)); });

    const bool want_h_r = opt.force_h_r || cfg.wants(Feature::h_r);
    if (opt.ground || want_h_r) {
        stage("dsm", [&] { r.dsm = rasterize_dsm(cloud, index, cfg.dsm_points); });
        stage("inpaint", [&] {
            InpaintReport rep;
            r.dsm = inpaint_heat(r.dsm, cfg.inpaint_tol, cfg.inpaint_max_iter, &rep);
            if (!rep.converged)
                log::warn("inpainting stopped after " + std::to_string(rep.iterations) +
                          " sweeps (last update " + fmt(rep.max_update) + ")");
        });
        if (cfg.ground_mode == GroundMode::spline) {
            GroundCandidates candidates;
            stage("ground candidates", [&] {
                std::optional<RasterGrid> mask;
                if (!cfg.mask.empty())
                    mask = import_asc(cfg.mask);
                candidates = extract_ground_candidates(r.dsm, cfg.min_filter_radius, cfg.min_filter_tol,
                                                       mask ? &*mask : nullptr);
                r.ground = candidates.mask();
            });
            stage("spline dtm", [&] { r.dtm = fit_dtm_spline(candidates, r.dsm.geometry(), cfg.spline); });
        } else {
            stage("ransac", [&] {
                r.plane = ransac_ground_plane(cloud, cfg.ransac_threshold, cfg.ransac_iterations, cfg.seed);
                r.dtm = plane_raster(*r.plane, r.dsm.geometry());
            });
        }
        stage("ndsm", [&] { r.ndsm = ndsm(r.dsm, r.dtm); });
    }
    if (want_h_r)
        stage("h_r", [&] {
            cloud = r.plane ? relative_elevation_plane(std::move(cloud), *r.plane)
                            : relative_elevation(std::move(cloud), r.dtm, cfg.relz_mode);
        });
    if (cfg.wants(Feature::nu))
        stage("nu", [&] { cloud = assign_cell_values(std::move(cloud), index, grid_feature_count(index), kPointCount); });
    if (cfg.wants(Feature::sigma_z))
        stage("sigma_z", [&] {
            const RasterGrid zvar = grid_feature_zvar(cloud, index);
            cloud = assign_cell_values(std::move(cloud), index, zvar, kElevationVariance);
        });

    const bool local = cfg.wants(Feature::planarity) || cfg.wants(Feature::normal_z) || cfg.wants(Feature::extras);
    if (local) {
        std::optional<NeighborIndex> knn;
        stage("knn index", [&] { knn.emplace(build_neighbor_index(cloud)); });
        stage("local features", [&] {
            const auto feats = structure_tensor_features(cloud, *knn, cfg.k_planarity, cfg.k_normal);
            cloud = append_local_features(std::move(cloud), feats, cfg.wants(Feature::extras));
            if (!cfg.wants(Feature::planarity))
                cloud.remove_feature(kPlanarity);
            if (!cfg.wants(Feature::normal_z))
                cloud.remove_feature(kNormalZ);
        });
    }
    r.cloud = std::move(cloud);
}

void check_paths(const PipelineConfig& cfg)
{
    std::error_code ec;
    const auto in = std::filesystem::weakly_canonical(cfg.input, ec);
    const auto out = std::filesystem::weakly_canonical(cfg.output, ec);
    if (!ec && in == out)
        throw std::invalid_argument("output path must differ from the input path");
}

PipelineResult run(const PipelineConfig& cfg, const Options& opt, bool write_rasters)
{
    const auto t0 = Clock::now();
    const std::size_t warnings0 = log::warning_count();
    PipelineResult r;
    StageRunner stage(r);
    stage("config", [&] {
        cfg.validate();
        check_paths(cfg);
    });
    PointCloud cloud;
    stage("load", [&] { cloud = load_cloud(cfg.input); });
    process(std::move(cloud), cfg, opt, r, stage);
    stage("save", [&] {
        if (!cfg.output.parent_path().empty())
            std::filesystem::create_directories(cfg.output.parent_path());
        save_cloud(r.cloud, cfg.output, cfg.output_format);
        r.written.push_back(cfg.output);
    });
    if (write_rasters)
        stage("rasters", [&] {
            const std::pair<const char*, const RasterGrid*> layers[] = {
                {"dsm", &r.dsm}, {"dtm", &r.dtm}, {"ndsm", &r.ndsm}, {"ground", &r.ground}};
            for (const auto& [name, grid] : layers) {
                if (grid->size() == 0)
                    continue;
                const auto path = raster_output_path(cfg.output, name);
                export_raster(*grid, path, RasterFormat::asc);
                r.written.push_back(path);
            }
        });
    r.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.warnings = log::warning_count() - warnings0;
    return r;
}

} // namespace

PipelineResult process_cloud(PointCloud cloud, const PipelineConfig& config)
{
    const auto t0 = Clock::now();
    const std::size_t warnings0 = log::warning_count();
    PipelineResult r;
    StageRunner stage(r);
    stage("config", [&] { config.validate(false); });
    process(std::move(cloud), config, Options{}, r, stage);
    r.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.warnings = log::warning_count() - warnings0;
    return r;
}

PipelineResult run_pipeline(const PipelineConfig& config)
{
    return run(config, Options{}, true);
}

PipelineResult run_features(const PipelineConfig& config)
{
    if (config.features.empty())
        throw StageError("config", StageError::Kind::usage, "the features command needs a nonempty feature set");
    PipelineConfig cfg = config;
    if (!cfg.wants(Feature::h_r)) {
        // Ground parameters are irrelevant without h_r.
        cfg.ground_mode = GroundMode::ransac;
    }
    return run(cfg, Options{false, false}, false);
}

std::filesystem::path raster_output_path(const std::filesystem::path& output, const std::string& layer)
{
    auto name = output.stem().string() + "_" + layer + ".asc";
    return output.parent_path() / name;
}

std::string format_summary(const PipelineResult& r)
{
    std::ostringstream o;
    double staged = 0.0;
    o << "stage timings:\n";
    for (const auto& t : r.timings) {
        char line[96];
        std::snprintf(line, sizeof line, "  %-18s %9.3f s\n", t.stage.c_str(), t.seconds);
        o << line;
        staged += t.seconds;
    }
    char tail[160];
    std::snprintf(tail, sizeof tail, "  %-18s %9.3f s (wall %.3f s)\n", "total", staged, r.total_seconds);
    o << tail;
    o << "points: " << r.input_points << " in, " << r.cloud.size() << " out\n";
    o << "warnings: " << r.warnings << '\n';
    for (const auto& p : r.written)
        o << "wrote " << p.string() << '\n';
    return o.str();
}

} // namespace terrafeat
