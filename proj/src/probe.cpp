#include "terrafeat/probe.hpp"

#include "terrafeat/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace terrafeat {

Eigen::MatrixXd ProbeModel::design(const Eigen::MatrixXd& features) const
{
    if (static_cast<std::size_t>(features.cols()) != num_features())
        throw std::invalid_argument("probe: feature count mismatch");
    Eigen::MatrixXd x(features.rows(), features.cols() + 1);
    for (Eigen::Index j = 0; j < features.cols(); ++j)
        x.col(j) = (features.col(j).array() - mean(j)) / deviation(j);
    x.col(features.cols()).setOnes();
    return x;
}

std::vector<Label> ProbeModel::predict(const Eigen::MatrixXd& features) const
{
    const Eigen::MatrixXd logits = design(features) * weights.transpose();
    std::vector<Label> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<Label>(best);
    }
    return out;
}

double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design, std::span<const Label> labels,
                    double l2, Eigen::MatrixXd* grad)
{
    const Eigen::Index n = design.rows();
    const Eigen::Index f = design.cols() - 1;
    Eigen::MatrixXd prob = design * weights.transpose(); // n x C
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double top = prob.row(i).maxCoeff();
        prob.row(i).array() = (prob.row(i).array() - top).exp();
        const double z = prob.row(i).sum();
        prob.row(i) /= z;
        loss -= std::log(std::max(prob(i, labels[static_cast<std::size_t>(i)]), 1e-300));
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    const auto w_nobias = weights.leftCols(f);
    loss += 0.5 * l2 * w_nobias.squaredNorm();
    if (grad) {
        for (Eigen::Index i = 0; i < n; ++i)
            prob(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
        *grad = inv_n * (prob.transpose() * design);
        grad->leftCols(f) += l2 * w_nobias;
    }
    return loss;
}

ProbeModel train_probe(const Eigen::MatrixXd& features, std::span<const Label> labels, std::size_t num_classes,
                       const ProbeConfig& config)
{
    const auto n = static_cast<std::size_t>(features.rows());
    const auto f = static_cast<std::size_t>(features.cols());
    if (labels.size() != n)
        throw std::invalid_argument("probe: label count does not match feature rows");
    if (!features.allFinite())
        throw std::invalid_argument("probe: features must be finite");
    if (num_classes < 2)
        throw std::invalid_argument("probe: need at least two classes");
    std::vector<bool> present(num_classes, false);
    for (Label l : labels) {
        if (l >= num_classes)
            throw std::invalid_argument("probe: label out of range");
        present[l] = true;
    }
    if (std::count(present.begin(), present.end(), true) < 2)
        throw std::invalid_argument("probe: training data contains a single class");

    // Canonical row order: by label, then features lexicographically.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (labels[a] != labels[b])
            return labels[a] < labels[b];
        for (std::size_t j = 0; j < f; ++j) {
            const double fa = features(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
            const double fb = features(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
            if (fa != fb)
                return fa < fb;
        }
        return false;
    });
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
    std::vector<Label> y(n);
    for (std::size_t r = 0; r < n; ++r) {
        x.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(order[r]));
        y[r] = labels[order[r]];
    }

    ProbeModel model;
    model.mean = x.colwise().mean().transpose();
    model.deviation.resize(static_cast<Eigen::Index>(f));
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(f); ++j) {
        const double var = (x.col(j).array() - model.mean(j)).square().mean();
        const double sd = std::sqrt(var);
        model.deviation(j) = sd > 1e-12 * std::max(1.0, std::abs(model.mean(j))) ? sd : 1.0;
    }
    const Eigen::MatrixXd design = model.design(x);

    std::mt19937_64 rng(derive_seed(config.seed, SeedStream::probe_init));
    std::normal_distribution<double> init(0.0, 0.01);
    model.weights.resize(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(f + 1));
    for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < model.weights.cols(); ++c)
            model.weights(r, c) = init(rng);

    Eigen::MatrixXd grad;
    model.loss.push_back(softmax_loss(model.weights, design, y, config.l2, &grad));
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        model.weights -= config.lr * grad;
        model.loss.push_back(softmax_loss(model.weights, design, y, config.l2, &grad));
    }
    return model;
}

Eigen::MatrixXd feature_matrix(const PointCloud& cloud, const std::vector<std::string>& columns,
                               std::span<const std::size_t> rows)
{
    std::vector<std::string> expanded;
    for (const auto& c : columns) {
        if (c == "color")
            expanded.insert(expanded.end(), {"red", "green", "blue"});
        else
            expanded.push_back(c);
    }
    if (expanded.empty())
        throw std::invalid_argument("feature set is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(expanded.size()));
    for (std::size_t j = 0; j < expanded.size(); ++j) {
        const std::string& name = expanded[j];
        const auto col = static_cast<Eigen::Index>(j);
        auto fill = [&](auto get) {
            for (std::size_t r = 0; r < rows.size(); ++r)
                m(static_cast<Eigen::Index>(r), col) = get(rows[r]);
        };
        if (name == "red" || name == "green" || name == "blue") {
            if (!cloud.has_colors())
                throw std::invalid_argument("feature set needs colors but the cloud has none");
            const auto& rgb = cloud.colors();
            if (name == "red") fill([&](std::size_t i) { return double(rgb[i].r); });
            else if (name == "green") fill([&](std::size_t i) { return double(rgb[i].g); });
            else fill([&](std::size_t i) { return double(rgb[i].b); });
        } else if (name == "x" || name == "y" || name == "z") {
            const auto& p = cloud.positions();
            if (name == "x") fill([&](std::size_t i) { return p[i].x; });
            else if (name == "y") fill([&](std::size_t i) { return p[i].y; });
            else fill([&](std::size_t i) { return p[i].z; });
        } else {
            if (!cloud.has_feature(name))
                throw std::invalid_argument("missing feature column '" + name + "'");
            const auto& v = cloud.feature(name);
            fill([&](std::size_t i) { return double(v[i]); });
        }
    }
    return m;
}

std::vector<AblationRow> probe_ablation(const PointCloud& cloud, const std::vector<NamedFeatureSet>& feature_sets,
                                        const SplitConfig& split, const ProbeConfig& probe, std::size_t num_classes)
{
    if (!cloud.has_labels())
        throw std::invalid_argument("ablation needs a labelled cloud");
    if (feature_sets.empty())
        throw std::invalid_argument("ablation needs at least one feature set");
    if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must lie in (0, 1)");

    const auto& labels = cloud.labels();
    std::vector<std::size_t> labelled;
    Label max_label = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != kUnlabeled) {
            labelled.push_back(i);
            max_label = std::max(max_label, labels[i]);
        }
    if (labelled.size() < 4)
        throw std::invalid_argument("ablation needs labelled points");
    if (num_classes == 0)
        num_classes = static_cast<std::size_t>(max_label) + 1;

    std::mt19937_64 rng(derive_seed(split.seed, SeedStream::split));
    std::shuffle(labelled.begin(), labelled.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(labelled.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, labelled.size() - 1);
    std::vector<std::size_t> train(labelled.begin(), labelled.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(labelled.begin() + static_cast<std::ptrdiff_t>(n_train), labelled.end());
    if (train.size() > split.max_train)
        train.resize(split.max_train);

    std::vector<Label> y_train, y_test;
    for (auto i : train)
        y_train.push_back(labels[i]);
    for (auto i : test)
        y_test.push_back(labels[i]);

    std::vector<AblationRow> rows;
    for (const auto& set : feature_sets) {
        const ProbeModel model = train_probe(feature_matrix(cloud, set.columns, train), y_train, num_classes, probe);
        const auto pred = model.predict(feature_matrix(cloud, set.columns, test));
        AblationRow row{set.name, confusion(y_test, pred, num_classes), {}};
        row.report = metrics(row.confusion);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_ablation_text(const std::vector<AblationRow>& rows)
{
    std::ostringstream out;
    char line[200];
    std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s\n", "features", "OA", "mIoU", "mF1");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-24s %8.2f %8.2f %8.2f\n", r.name.c_str(), r.report.overall_accuracy,
                      r.report.mean_iou, r.report.mean_f1);
        out << line;
    }
    return out.str();
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows)
{
    std::ostringstream out;
    out << "features,oa,miou,mf1\n";
    char line[200];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%.2f,%.2f,%.2f\n", r.name.c_str(), r.report.overall_accuracy,
                      r.report.mean_iou, r.report.mean_f1);
        out << line;
    }
    return out.str();
}

NamedFeatureSet parse_feature_set(std::string_view spec, const PointCloud& cloud)
{
    NamedFeatureSet set;
    const std::size_t eq = spec.find('=');
    std::string_view list = spec;
    if (eq != std::string_view::npos) {
        set.name = std::string(spec.substr(0, eq));
        list = spec.substr(eq + 1);
    } else {
        set.name = std::string(spec);
    }
    auto add = [&](const std::string& c) {
        if (std::find(set.columns.begin(), set.columns.end(), c) == set.columns.end())
            set.columns.push_back(c);
    };
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = std::min(list.find(',', pos), list.size());
        std::string token(list.substr(pos, comma - pos));
        pos = comma + 1;
        token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char ch) { return std::isspace(ch); }),
                    token.end());
        if (token.empty())
            continue;
        if (token == "all") {
            if (cloud.has_colors())
                add("color");
            for (const auto& name : cloud.feature_names())
                add(name);
        } else {
            add(token);
        }
    }
    if (set.columns.empty())
        throw std::invalid_argument("feature set '" + std::string(spec) + "' selects no columns");
    if (set.name.empty())
        throw std::invalid_argument("feature set name is empty");
    return set;
}

} // namespace terrafeat
