#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ganbench/tensor.hpp"

namespace ganbench {

// One-vs-rest counts per class. For every class c,
// tp + fp + fn + tn == N (the shared sample count).
struct ConfusionCounts {
    struct PerClass {
        std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    };
    std::vector<PerClass> per_class;
    std::uint64_t n = 0;

    std::size_t num_classes() const { return per_class.size(); }
};

ConfusionCounts confusion(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& labels,
                          std::size_t num_classes);

// Macro-averaged (unweighted class mean) metrics. Degenerate 0/0
// denominators contribute 0 and append a warning instead of failing.
struct MetricsSummary {
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;  // 2PR/(P+R) of the macro precision/recall
    struct PerClass {
        double precision = 0.0;
        double recall = 0.0;
        double f1 = 0.0;
    };
    std::vector<PerClass> per_class;
    std::vector<std::string> warnings;
};

MetricsSummary metrics(const ConfusionCounts& counts);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// Threshold sweep over the distinct score values, anchored at (0, 0) and
// (1, 1); needs at least one positive and one negative label.
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area under a sorted ROC point list.
double auc(const std::vector<RocPoint>& points);

// Softmax probability of `positive_class` per row, with binarized labels.
std::pair<std::vector<double>, std::vector<int>> one_vs_rest_scores(const Tensor& logits,
                                                                    const std::vector<std::size_t>& labels,
                                                                    std::size_t positive_class);

// Full evaluation record, serializable as JSON.
struct EvalReport {
    std::string model;
    std::uint64_t seed = 0;
    std::string averaging = "macro";
    MetricsSummary summary;
    ConfusionCounts counts;
    std::size_t positive_class = 0;           // class plotted as the single ROC curve
    std::vector<RocPoint> roc;                // curve for positive_class
    double roc_auc = 0.0;                     // auc of that curve
    std::vector<double> per_class_auc;        // one-vs-rest auc per class
    double macro_auc = 0.0;
    nlohmann::json config_echo;               // config the run was produced from
};

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
// Structural validation: ranges, ROC ordering, anchor points.
void validate_report(const nlohmann::json& j);

// fpr,tpr CSV with a header row.
std::string roc_csv(const std::vector<RocPoint>& points);

// Minimal SVG plot of one or more ROC curves with a diagonal reference.
std::string roc_svg(const std::vector<std::pair<std::string, std::vector<RocPoint>>>& curves);

}  // namespace ganbench
