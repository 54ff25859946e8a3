#pragma once

#include "terrafeat/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace terrafeat {

/// Rows are ground truth, columns predictions.
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts; ///< row-major, num_classes^2
    std::vector<std::string> class_names;

    explicit ConfusionMatrix(std::size_t classes = 0);
    /// Builds a matrix from nested rows; throws when not square.
    static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);

    std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts[gt * num_classes + pred]; }
    std::uint64_t& at(std::size_t gt, std::size_t pred) { return counts[gt * num_classes + pred]; }
    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t gt) const;
    std::uint64_t col_sum(std::size_t pred) const;
};

/// Tallies points whose ground truth differs from `ignore_label`. Throws
/// std::invalid_argument on a length mismatch or a label that is neither
/// below num_classes nor the ignore label.
ConfusionMatrix confusion(std::span<const Label> gt, std::span<const Label> pred, std::size_t num_classes,
                          Label ignore_label = kUnlabeled);

/// Percentages. A class absent from both truth and prediction has no IoU or
/// F1 and is left out of the means.
struct MetricsReport {
    double overall_accuracy = 0.0;
    std::vector<std::optional<double>> iou;
    std::vector<std::optional<double>> f1;
    double mean_iou = 0.0;
    double mean_f1 = 0.0;
    std::size_t defined_classes = 0;
    std::vector<std::string> class_names;
    std::vector<std::uint64_t> support; ///< ground-truth count per class
};

MetricsReport metrics(const ConfusionMatrix& cm);

/// Aligned plain-text table.
std::string format_report_text(const MetricsReport& report);
/// CSV: header "class,iou,f1,support" then one row per class and the rows
/// OA, mIoU, mF1. Undefined values are left empty.
std::string format_report_csv(const MetricsReport& report);

} // namespace terrafeat
