#pragma once

#include "terrafeat/metrics.hpp"
#include "terrafeat/point_cloud.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace terrafeat {

struct ProbeConfig {
    double lr = 0.2;
    std::size_t epochs = 500;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
};

/**
 * Multinomial logistic regression over standardised features. Column F of
 * `weights` is the bias.
 */
struct ProbeModel {
    Eigen::MatrixXd weights;   ///< num_classes x (F + 1)
    Eigen::VectorXd mean;      ///< per-feature training mean
    Eigen::VectorXd deviation; ///< per-feature training deviation (1 for constants)
    std::vector<double> loss;  ///< loss before the first and after every epoch

    std::size_t num_classes() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t num_features() const { return static_cast<std::size_t>(mean.size()); }

    /// Standardised design matrix with a trailing column of ones.
    Eigen::MatrixXd design(const Eigen::MatrixXd& features) const;
    std::vector<Label> predict(const Eigen::MatrixXd& features) const;
};

/**
 * Mean cross-entropy plus l2/2 * ||W without bias||^2 for a design matrix
 * that already carries the bias column. Writes the gradient when `grad` is
 * non-null.
 */
double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design, std::span<const Label> labels,
                    double l2, Eigen::MatrixXd* grad = nullptr);

/**
 * Full-batch gradient descent from small random weights (seeded). Rows are
 * put into a canonical order first, so the fitted model does not depend on
 * the order of the training rows. Throws std::invalid_argument for fewer
 * than two classes present, non-finite features or labels >= num_classes.
 */
ProbeModel train_probe(const Eigen::MatrixXd& features, std::span<const Label> labels, std::size_t num_classes,
                       const ProbeConfig& config = {});

struct NamedFeatureSet {
    std::string name;
    /// Feature column names; "color" expands to red, green, blue, and
    /// "red"/"green"/"blue"/"x"/"y"/"z" select those channels directly.
    std::vector<std::string> columns;
};

/// Parses "name=col1,col2" or "col1,col2" (named after its spec). The
/// token "all" stands for color (when present) plus every feature column
/// of `cloud`.
NamedFeatureSet parse_feature_set(std::string_view spec, const PointCloud& cloud);

struct SplitConfig {
    double train_fraction = 0.5;
    std::uint64_t seed = 0;
    /// Training rows beyond this are dropped (after shuffling).
    std::size_t max_train = 200000;
};

struct AblationRow {
    std::string name;
    ConfusionMatrix confusion;
    MetricsReport report;
};

/// Feature matrix (points x columns) for the given column names.
Eigen::MatrixXd feature_matrix(const PointCloud& cloud, const std::vector<std::string>& columns,
                               std::span<const std::size_t> rows);

/**
 * Trains one probe per feature set on a shared random split of the
 * labelled points and scores each on the held-out part. num_classes = 0
 * means 1 + the largest label present.
 */
std::vector<AblationRow> probe_ablation(const PointCloud& cloud, const std::vector<NamedFeatureSet>& feature_sets,
                                        const SplitConfig& split, const ProbeConfig& probe = {},
                                        std::size_t num_classes = 0);

/// One line per feature set: name, OA, mIoU, mF1.
std::string format_ablation_text(const std::vector<AblationRow>& rows);
std::string format_ablation_csv(const std::vector<AblationRow>& rows);

} // namespace terrafeat
