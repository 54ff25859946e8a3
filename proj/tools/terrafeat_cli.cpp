#include "terrafeat/cloud_io.hpp"
#include "terrafeat/error.hpp"
#include "terrafeat/metrics.hpp"
#include "terrafeat/pipeline.hpp"
#include "terrafeat/probe.hpp"
#include "terrafeat/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tf = terrafeat;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

const std::map<std::string, std::string>& setting_help()
{
    static const std::map<std::string, std::string> help = {
        {"input", "input point cloud (ply, xyz, csv)"},
        {"output", "augmented point cloud to write"},
        {"dsm_cell", "DSM cell size in meters (default 0.25)"},
        {"min_filter_radius", "ground-candidate window radius in meters"},
        {"min_filter_tol", "height above the window minimum still accepted as ground (default 0.25)"},
        {"lambda", "spline smoothness weight in [0, 1) (default 0.7)"},
        {"epsilon", "spline first-derivative weight (default 1e-3)"},
        {"node_cell", "spline node spacing in meters, 0 = 4 x dsm_cell"},
        {"irls_iters", "reweighting iterations (default 20)"},
        {"irls_delta", "absolute-value smoothing (default 1e-3)"},
        {"cg_tol", "inner solver relative tolerance (default 1e-6)"},
        {"cg_max_iter", "inner solver iteration cap (default 2000)"},
        {"data_term", "l1 or l2"},
        {"multilevel_init", "coarse-to-fine initialisation (true/false)"},
        {"k_planarity", "neighbours for planarity (default 10)"},
        {"k_normal", "neighbours for normal_z (default 100)"},
        {"ground_mode", "spline or ransac"},
        {"relz_mode", "cell or bilinear"},
        {"subsample_cell", "voxel size for grid subsampling, or none"},
        {"features", "comma list of h_r, planarity, normal_z, nu, sigma_z, extras"},
        {"seed", "random seed"},
        {"mask", "asc raster; nonzero cells are excluded from the ground"},
        {"dsm_points", "highest points averaged per DSM cell (default 4)"},
        {"inpaint_tol", "inpainting convergence threshold (default 1e-4)"},
        {"inpaint_max_iter", "inpainting sweep cap (default 10000)"},
        {"ransac_threshold", "plane inlier distance in meters (default 0.2)"},
        {"ransac_iterations", "plane hypotheses (default 1000)"},
        {"output_format", "ply_binary, ply_ascii or csv"},
    };
    return help;
}

struct SettingFlags {
    std::string config;
    std::map<std::string, std::string> values;
    std::vector<std::string> keys;
};

void add_setting_flags(CLI::App* sub, SettingFlags& flags, const std::vector<std::string>& skip = {})
{
    sub->add_option("--config", flags.config, "key = value settings file; flags on the command line win")
        ->check(CLI::ExistingFile);
    for (const auto& key : tf::setting_keys()) {
        if (std::find(skip.begin(), skip.end(), key) != skip.end())
            continue;
        flags.keys.push_back(key);
        sub->add_option("--" + key, flags.values[key], setting_help().at(key));
    }
}

tf::PipelineConfig resolve_config(const SettingFlags& flags, const CLI::App* sub)
{
    tf::PipelineConfig config;
    if (!flags.config.empty())
        for (const auto& [key, value] : tf::read_settings_file(flags.config))
            tf::apply_setting(config, key, value);
    for (const auto& key : flags.keys)
        if (sub->count("--" + key) > 0)
            tf::apply_setting(config, key, flags.values.at(key));
    return config;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw tf::IoError("cannot write " + path);
    out << text;
    if (!out)
        throw tf::IoError("write failed for " + path);
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw tf::IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

tf::SaveFormat format_for(const std::string& path, const std::string& requested)
{
    if (!requested.empty()) {
        tf::PipelineConfig tmp;
        tf::apply_setting(tmp, "output_format", requested);
        return tmp.output_format;
    }
    const auto ext = std::filesystem::path(path).extension().string();
    return ext == ".csv" ? tf::SaveFormat::csv : tf::SaveFormat::ply_binary;
}

// ---------------------------------------------------------------------------

int cmd_pipeline(const tf::PipelineConfig& config, bool features_only)
{
    const auto result = features_only ? tf::run_features(config) : tf::run_pipeline(config);
    std::cout << tf::format_summary(result);
    return 0;
}

struct EvalArgs {
    std::string gt;
    std::string pred;
    std::string pred_column;
    std::size_t num_classes = 0;
    std::string report;
    std::string report_csv;
};

std::vector<tf::Label> labels_from_column(const tf::PointCloud& cloud, const std::string& column)
{
    if (!cloud.has_feature(column))
        throw std::invalid_argument("prediction column '" + column + "' is missing");
    const auto& values = cloud.feature(column);
    std::vector<tf::Label> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float v = values[i];
        if (!(v >= 0.0f && v <= 255.0f) || std::nearbyint(v) != v)
            throw std::invalid_argument("prediction column '" + column + "' holds a non-label value at point " +
                                        std::to_string(i));
        out[i] = static_cast<tf::Label>(v);
    }
    return out;
}

int cmd_eval(const EvalArgs& a)
{
    if (a.pred.empty() == a.pred_column.empty())
        throw std::invalid_argument("give exactly one of --pred and --pred_column");
    const auto gt_cloud = tf::load_cloud(a.gt);
    if (!gt_cloud.has_labels())
        throw std::invalid_argument(a.gt + " has no class column");
    std::vector<tf::Label> pred;
    if (!a.pred.empty()) {
        const auto pred_cloud = tf::load_cloud(a.pred);
        if (!pred_cloud.has_labels())
            throw std::invalid_argument(a.pred + " has no class column");
        pred = pred_cloud.labels();
    } else {
        pred = labels_from_column(gt_cloud, a.pred_column);
    }
    const auto& gt = gt_cloud.labels();
    if (pred.size() != gt.size())
        throw std::invalid_argument("point counts differ: " + std::to_string(gt.size()) + " ground truth vs " +
                                    std::to_string(pred.size()) + " predicted");
    std::size_t classes = a.num_classes;
    if (classes == 0) {
        for (std::size_t i = 0; i < gt.size(); ++i) {
            if (gt[i] != tf::kUnlabeled)
                classes = std::max<std::size_t>(classes, gt[i] + 1u);
            if (pred[i] != tf::kUnlabeled)
                classes = std::max<std::size_t>(classes, pred[i] + 1u);
        }
    }
    const auto report = tf::metrics(tf::confusion(gt, pred, classes));
    const auto text = tf::format_report_text(report);
    std::cout << text;
    if (!a.report.empty())
        write_text(a.report, text);
    if (!a.report_csv.empty())
        write_text(a.report_csv, tf::format_report_csv(report));
    return 0;
}

struct SynthArgs {
    std::string spec;
    std::string preset;
    std::string output;
    std::string output_format;
    std::string write_spec;
    double size = 0.0;
};

int cmd_synth(const SynthArgs& a, const CLI::App* sub, std::uint64_t seed, double density, double noise)
{
    if (a.spec.empty() == a.preset.empty())
        throw std::invalid_argument("give exactly one of --spec and --preset");
    tf::SceneSpec spec;
    if (!a.spec.empty()) {
        spec = tf::scene_from_json(read_text(a.spec));
    } else if (a.preset == "flat") {
        spec.xmax = spec.ymax = a.size > 0 ? a.size : 100.0;
    } else if (a.preset == "town") {
        spec = tf::town_scene(seed, a.size > 0 ? a.size : 120.0);
    } else if (a.preset == "terrain") {
        spec = tf::terrain_benchmark_scene(seed);
    } else {
        throw std::invalid_argument("unknown preset '" + a.preset + "' (flat, town, terrain)");
    }
    if (sub->count("--seed"))
        spec.seed = seed;
    if (sub->count("--density"))
        spec.density = density;
    if (sub->count("--noise"))
        spec.noise = noise;
    spec.validate();
    const auto cloud = tf::generate_scene(spec);
    tf::save_cloud(cloud, a.output, format_for(a.output, a.output_format));
    if (!a.write_spec.empty())
        write_text(a.write_spec, tf::scene_to_json(spec) + "\n");
    std::cout << "wrote " << cloud.size() << " points to " << a.output << '\n';
    return 0;
}

struct AblationArgs {
    std::string input;
    std::vector<std::string> sets;
    std::string output;
    double train_fraction = 0.5;
    std::size_t max_train = 200000;
    std::size_t num_classes = 0;
    std::uint64_t seed = 0;
    double lr = 0.2;
    std::size_t epochs = 500;
    double l2 = 1e-4;
};

int cmd_ablation(const AblationArgs& a)
{
    if (a.sets.empty())
        throw std::invalid_argument("at least one --set is required");
    const auto cloud = tf::load_cloud(a.input);
    if (!cloud.has_labels())
        throw std::invalid_argument(a.input + " has no class column");
    std::vector<tf::NamedFeatureSet> sets;
    for (const auto& s : a.sets)
        sets.push_back(tf::parse_feature_set(s, cloud));
    tf::SplitConfig split;
    split.train_fraction = a.train_fraction;
    split.seed = a.seed;
    split.max_train = a.max_train;
    tf::ProbeConfig probe;
    probe.lr = a.lr;
    probe.epochs = a.epochs;
    probe.l2 = a.l2;
    probe.seed = a.seed;
    const auto rows = tf::probe_ablation(cloud, sets, split, probe, a.num_classes);
    std::cout << tf::format_ablation_text(rows);
    if (!a.output.empty())
        write_text(a.output, tf::format_ablation_csv(rows));
    return 0;
}

struct RasterArgs {
    std::string raster;
    std::string layer = "dsm";
    std::string format = "asc";
    std::string output;
};

int cmd_raster_export(const RasterArgs& a, const tf::PipelineConfig& config)
{
    tf::RasterFormat format;
    if (a.format == "asc")
        format = tf::RasterFormat::asc;
    else if (a.format == "pgm")
        format = tf::RasterFormat::pgm;
    else
        throw std::invalid_argument("format must be asc or pgm");

    if (!a.raster.empty()) {
        tf::export_raster(tf::import_asc(a.raster), a.output, format);
        return 0;
    }
    if (config.input.empty())
        throw std::invalid_argument("give --input or --raster");
    const bool cell_layer = a.layer == "nu" || a.layer == "sigma_z";
    if (cell_layer) {
        tf::PipelineConfig cfg = config;
        cfg.ground_mode = tf::GroundMode::ransac;
        cfg.validate(false);
    } else {
        config.validate(false);
    }
    auto cloud = tf::load_cloud(config.input);
    tf::RasterGrid grid;
    if (cell_layer) {
        const auto index = tf::build_cell_index(cloud, config.dsm_cell, tf::compute_bbox(cloud));
        grid = a.layer == "nu" ? tf::grid_feature_count(index) : tf::grid_feature_zvar(cloud, index);
    } else if (a.layer == "dsm" || a.layer == "dtm" || a.layer == "ndsm" || a.layer == "ground") {
        tf::PipelineConfig cfg = config;
        cfg.features.clear();
        auto result = tf::process_cloud(std::move(cloud), cfg);
        grid = a.layer == "dsm" ? result.dsm : a.layer == "dtm" ? result.dtm : a.layer == "ndsm" ? result.ndsm : result.ground;
        if (grid.size() == 0)
            throw std::invalid_argument("layer '" + a.layer + "' is not produced by ground_mode=ransac");
    } else {
        throw std::invalid_argument("layer must be dsm, dtm, ndsm, ground, nu or sigma_z");
    }
    tf::export_raster(grid, a.output, format);
    return 0;
}

int exit_code_for(const tf::StageError& e)
{
    switch (e.kind()) {
    case tf::StageError::Kind::usage: return kExitUsage;
    case tf::StageError::Kind::io: return kExitIo;
    case tf::StageError::Kind::numerical: return kExitNumerical;
    case tf::StageError::Kind::internal: break;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Terrain-aware features for point cloud segmentation"};
    app.require_subcommand(1);

    SettingFlags pipeline_flags;
    auto* pipeline = app.add_subcommand("pipeline", "DSM, DTM, h_r and features; writes the cloud and rasters");
    add_setting_flags(pipeline, pipeline_flags);

    SettingFlags feature_flags;
    auto* features = app.add_subcommand("features", "compute the selected features only");
    add_setting_flags(features, feature_flags);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "confusion-matrix metrics against ground-truth labels");
    eval->add_option("--gt", eval_args.gt, "cloud with ground-truth class column")->required();
    eval->add_option("--pred", eval_args.pred, "cloud with predicted class column");
    eval->add_option("--pred_column", eval_args.pred_column, "feature column of --gt holding predictions");
    eval->add_option("--num_classes", eval_args.num_classes, "class count (default: largest label + 1)");
    eval->add_option("--report", eval_args.report, "write the text report here");
    eval->add_option("--report_csv", eval_args.report_csv, "write the CSV report here");

    SynthArgs synth_args;
    std::uint64_t synth_seed = 0;
    double synth_density = 0.0, synth_noise = 0.0;
    auto* synth = app.add_subcommand("synth", "generate a labelled synthetic scene");
    synth->add_option("--spec", synth_args.spec, "JSON scene description")->check(CLI::ExistingFile);
    synth->add_option("--preset", synth_args.preset, "flat, town or terrain");
    synth->add_option("--size", synth_args.size, "preset extent in meters");
    synth->add_option("--seed", synth_seed, "random seed");
    synth->add_option("--density", synth_density, "points per m^2");
    synth->add_option("--noise", synth_noise, "z noise in meters");
    synth->add_option("--output", synth_args.output, "cloud to write")->required();
    synth->add_option("--output_format", synth_args.output_format, "ply_binary, ply_ascii or csv");
    synth->add_option("--write_spec", synth_args.write_spec, "also write the resolved scene JSON");

    AblationArgs abl;
    auto* ablation = app.add_subcommand("ablation", "train probes on feature sets and compare held-out metrics");
    ablation->add_option("--input", abl.input, "labelled cloud with feature columns")->required();
    ablation->add_option("--set", abl.sets, "feature set, e.g. color or color,h_r or all (repeatable)");
    ablation->add_option("--output", abl.output, "write the comparison table as CSV");
    ablation->add_option("--train_fraction", abl.train_fraction, "share of labelled points used for training");
    ablation->add_option("--max_train", abl.max_train, "training points cap");
    ablation->add_option("--num_classes", abl.num_classes, "class count (default: largest label + 1)");
    ablation->add_option("--seed", abl.seed, "random seed");
    ablation->add_option("--lr", abl.lr, "gradient step");
    ablation->add_option("--epochs", abl.epochs, "gradient steps");
    ablation->add_option("--l2", abl.l2, "weight penalty");

    RasterArgs raster_args;
    SettingFlags raster_flags;
    auto* raster = app.add_subcommand("raster-export", "write a DSM, DTM, NDSM, ground, nu or sigma_z raster");
    add_setting_flags(raster, raster_flags, {"output", "features", "output_format", "k_planarity", "k_normal"});
    raster->add_option("--raster", raster_args.raster, "convert an existing asc raster instead");
    raster->add_option("--layer", raster_args.layer, "dsm, dtm, ndsm, ground, nu or sigma_z");
    raster->add_option("--format", raster_args.format, "asc or pgm");
    raster->add_option("--output", raster_args.output, "raster to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (pipeline->parsed())
            return cmd_pipeline(resolve_config(pipeline_flags, pipeline), false);
        if (features->parsed())
            return cmd_pipeline(resolve_config(feature_flags, features), true);
        if (eval->parsed())
            return cmd_eval(eval_args);
        if (synth->parsed())
            return cmd_synth(synth_args, synth, synth_seed, synth_density, synth_noise);
        if (ablation->parsed())
            return cmd_ablation(abl);
        if (raster->parsed())
            return cmd_raster_export(raster_args, resolve_config(raster_flags, raster));
    } catch (const tf::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const tf::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const tf::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
