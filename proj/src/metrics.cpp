#include "terrafeat/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace terrafeat {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : num_classes(classes), counts(classes * classes, 0)
{
    for (std::size_t c = 0; c < classes; ++c)
        class_names.push_back(std::to_string(c));
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::uint64_t>>& rows)
{
    ConfusionMatrix cm(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size())
            throw std::invalid_argument("confusion matrix must be square");
        for (std::size_t c = 0; c < rows.size(); ++c)
            cm.at(r, c) = rows[r][c];
    }
    return cm;
}

std::uint64_t ConfusionMatrix::total() const
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t gt) const
{
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < num_classes; ++p)
        s += at(gt, p);
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const
{
    std::uint64_t s = 0;
    for (std::size_t g = 0; g < num_classes; ++g)
        s += at(g, pred);
    return s;
}

ConfusionMatrix confusion(std::span<const Label> gt, std::span<const Label> pred, std::size_t num_classes,
                          Label ignore_label)
{
    if (gt.size() != pred.size())
        throw std::invalid_argument("ground truth and prediction lengths differ");
    if (num_classes == 0)
        throw std::invalid_argument("num_classes must be positive");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const Label g = gt[i];
        const Label p = pred[i];
        if (g != ignore_label && g >= num_classes)
            throw std::invalid_argument("ground-truth label " + std::to_string(g) + " out of range");
        if (p != ignore_label && p >= num_classes)
            throw std::invalid_argument("predicted label " + std::to_string(p) + " out of range");
        if (g == ignore_label)
            continue;
        if (p == ignore_label)
            throw std::invalid_argument("prediction carries the ignore label for a labelled point");
        ++cm.at(g, p);
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm)
{
    const std::uint64_t total = cm.total();
    if (cm.num_classes == 0 || total == 0)
        throw std::invalid_argument("metrics of an empty confusion matrix");
    MetricsReport r;
    r.class_names = cm.class_names;
    std::uint64_t trace = 0;
    double iou_sum = 0.0, f1_sum = 0.0;
    for (std::size_t c = 0; c < cm.num_classes; ++c) {
        const std::uint64_t tp = cm.at(c, c);
        const std::uint64_t fn = cm.row_sum(c) - tp;
        const std::uint64_t fp = cm.col_sum(c) - tp;
        trace += tp;
        r.support.push_back(cm.row_sum(c));
        if (tp + fp + fn == 0) {
            r.iou.emplace_back();
            r.f1.emplace_back();
            continue;
        }
        const double iou = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        const double f1 = 100.0 * 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        r.iou.emplace_back(iou);
        r.f1.emplace_back(f1);
        iou_sum += iou;
        f1_sum += f1;
        ++r.defined_classes;
    }
    r.overall_accuracy = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
    r.mean_iou = iou_sum / static_cast<double>(r.defined_classes);
    r.mean_f1 = f1_sum / static_cast<double>(r.defined_classes);
    return r;
}

namespace {

std::string fixed2(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string optional2(const std::optional<double>& v) { return v ? fixed2(*v) : std::string(); }

} // namespace

std::string format_report_text(const MetricsReport& report)
{
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %8s %8s %12s\n", "class", "IoU", "F1", "support");
    out << line;
    for (std::size_t c = 0; c < report.iou.size(); ++c) {
        const std::string iou = report.iou[c] ? fixed2(*report.iou[c]) : "n/a";
        const std::string f1 = report.f1[c] ? fixed2(*report.f1[c]) : "n/a";
        std::snprintf(line, sizeof(line), "%-16s %8s %8s %12llu\n", report.class_names[c].c_str(), iou.c_str(),
                      f1.c_str(), static_cast<unsigned long long>(report.support[c]));
        out << line;
    }
    std::snprintf(line, sizeof(line), "OA %.2f  mIoU %.2f  mF1 %.2f  (%zu of %zu classes defined)\n",
                  report.overall_accuracy, report.mean_iou, report.mean_f1, report.defined_classes,
                  report.iou.size());
    out << line;
    return out.str();
}

std::string format_report_csv(const MetricsReport& report)
{
    std::ostringstream out;
    out << "class,iou,f1,support\n";
    for (std::size_t c = 0; c < report.iou.size(); ++c)
        out << report.class_names[c] << ',' << optional2(report.iou[c]) << ',' << optional2(report.f1[c]) << ','
            << report.support[c] << '\n';
    out << "OA," << fixed2(report.overall_accuracy) << ",,\n";
    out << "mIoU," << fixed2(report.mean_iou) << ",,\n";
    out << "mF1,," << fixed2(report.mean_f1) << ",\n";
    return out.str();
}

} // namespace terrafeat
