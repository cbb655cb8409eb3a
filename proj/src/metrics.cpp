#include "ganbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ganbench/errors.hpp"

namespace ganbench {

ConfusionCounts confusion(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& labels,
                          std::size_t num_classes) {
    if (predictions.size() != labels.size()) {
        throw ContractError("confusion got " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(labels.size()) + " labels");
    }
    if (num_classes == 0) throw ContractError("confusion needs at least one class");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] >= num_classes || labels[i] >= num_classes) {
            throw ContractError("confusion value out of range at sample " + std::to_string(i));
        }
    }
    ConfusionCounts counts;
    counts.n = predictions.size();
    counts.per_class.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& pc = counts.per_class[c];
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool is_c = labels[i] == c;
            const bool said_c = predictions[i] == c;
            if (is_c && said_c) ++pc.tp;
            else if (!is_c && said_c) ++pc.fp;
            else if (is_c && !said_c) ++pc.fn;
            else ++pc.tn;
        }
    }
    return counts;
}

MetricsSummary metrics(const ConfusionCounts& counts) {
    if (counts.n == 0) throw ContractError("metrics over an empty sample set");
    if (counts.per_class.empty()) throw ContractError("metrics needs at least one class");
    for (std::size_t c = 0; c < counts.per_class.size(); ++c) {
        const auto& pc = counts.per_class[c];
        if (pc.tp + pc.fp + pc.fn + pc.tn != counts.n) {
            throw ContractError("confusion counts for class " + std::to_string(c) +
                                " do not sum to the sample count");
        }
    }

    MetricsSummary out;
    std::uint64_t correct = 0;
    double psum = 0.0, rsum = 0.0;
    for (std::size_t c = 0; c < counts.per_class.size(); ++c) {
        const auto& pc = counts.per_class[c];
        correct += pc.tp;
        MetricsSummary::PerClass m;
        if (pc.tp + pc.fp == 0) {
            out.warnings.push_back("class " + std::to_string(c) + ": no predictions, precision set to 0");
        } else {
            m.precision = double(pc.tp) / double(pc.tp + pc.fp);
        }
        if (pc.tp + pc.fn == 0) {
            out.warnings.push_back("class " + std::to_string(c) + ": no samples, recall set to 0");
        } else {
            m.recall = double(pc.tp) / double(pc.tp + pc.fn);
        }
        if (m.precision + m.recall > 0.0) {
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        } else {
            out.warnings.push_back("class " + std::to_string(c) + ": precision + recall is 0, f1 set to 0");
        }
        psum += m.precision;
        rsum += m.recall;
        out.per_class.push_back(m);
    }
    const double k = double(counts.per_class.size());
    out.precision = psum / k;
    out.recall = rsum / k;
    out.accuracy = double(correct) / double(counts.n);
    if (out.precision + out.recall > 0.0) {
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    } else {
        out.warnings.push_back("macro precision + recall is 0, f1 set to 0");
    }
    return out;
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw ContractError("roc_curve got " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(labels.size()) + " labels");
    }
    std::uint64_t pos = 0, neg = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw ContractError("roc_curve labels must be 0 or 1");
        (l == 1 ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0) {
        throw ContractError("roc_curve needs at least one positive and one negative label");
    }

    std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    for (double t : thresholds) {
        std::uint64_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) (labels[i] == 1 ? tp : fp) += 1;
        }
        RocPoint p{double(fp) / double(neg), double(tp) / double(pos)};
        if (p.fpr != points.back().fpr || p.tpr != points.back().tpr) points.push_back(p);
    }
    if (points.back().fpr != 1.0 || points.back().tpr != 1.0) points.push_back({1.0, 1.0});
    return points;
}

double auc(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) * 0.5;
    }
    return area;
}

std::pair<std::vector<double>, std::vector<int>> one_vs_rest_scores(const Tensor& logits,
                                                                    const std::vector<std::size_t>& labels,
                                                                    std::size_t positive_class) {
    if (logits.rank() != 2) {
        throw ContractError("one_vs_rest_scores expects [B x K] logits, got " + shape_str(logits.shape()));
    }
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    if (labels.size() != B) {
        throw ContractError("one_vs_rest_scores got " + std::to_string(labels.size()) + " labels for batch " +
                            std::to_string(B));
    }
    if (positive_class >= K) {
        throw ContractError("positive class " + std::to_string(positive_class) + " out of range");
    }
    for (std::size_t y : labels) {
        if (y >= K) throw ContractError("one_vs_rest_scores label out of range");
    }

    std::vector<double> scores(B);
    std::vector<int> binary(B);
    const double* pl = logits.data();
    for (std::size_t i = 0; i < B; ++i) {
        const double* row = pl + i * K;
        double mx = row[0];
        for (std::size_t j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < K; ++j) denom += std::exp(row[j] - mx);
        scores[i] = std::exp(row[positive_class] - mx) / denom;
        binary[i] = labels[i] == positive_class ? 1 : 0;
    }
    return {std::move(scores), std::move(binary)};
}

namespace {

nlohmann::json points_to_json(const std::vector<RocPoint>& points) {
    nlohmann::json arr = nlohmann::json::array();
    for (const RocPoint& p : points) arr.push_back({p.fpr, p.tpr});
    return arr;
}

std::vector<RocPoint> points_from_json(const nlohmann::json& arr) {
    std::vector<RocPoint> points;
    for (const auto& p : arr) points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return points;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t c = 0; c < report.counts.per_class.size(); ++c) {
        const auto& pc = report.counts.per_class[c];
        const auto& m = report.summary.per_class.at(c);
        per_class.push_back({{"class", c},
                             {"tp", pc.tp},
                             {"fp", pc.fp},
                             {"fn", pc.fn},
                             {"tn", pc.tn},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1}});
    }
    return nlohmann::json{{"model", report.model},
                          {"seed", report.seed},
                          {"averaging", report.averaging},
                          {"samples", report.counts.n},
                          {"metrics",
                           {{"precision", report.summary.precision},
                            {"recall", report.summary.recall},
                            {"accuracy", report.summary.accuracy},
                            {"f1", report.summary.f1}}},
                          {"per_class", per_class},
                          {"roc",
                           {{"positive_class", report.positive_class},
                            {"points", points_to_json(report.roc)},
                            {"auc", report.roc_auc},
                            {"per_class_auc", report.per_class_auc},
                            {"macro_auc", report.macro_auc}}},
                          {"warnings", report.summary.warnings},
                          {"config", report.config_echo}};
}

EvalReport report_from_json(const nlohmann::json& j) {
    validate_report(j);
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.averaging = j.at("averaging").get<std::string>();
    r.counts.n = j.at("samples").get<std::uint64_t>();
    const auto& m = j.at("metrics");
    r.summary.precision = m.at("precision").get<double>();
    r.summary.recall = m.at("recall").get<double>();
    r.summary.accuracy = m.at("accuracy").get<double>();
    r.summary.f1 = m.at("f1").get<double>();
    for (const auto& pc : j.at("per_class")) {
        ConfusionCounts::PerClass c;
        c.tp = pc.at("tp").get<std::uint64_t>();
        c.fp = pc.at("fp").get<std::uint64_t>();
        c.fn = pc.at("fn").get<std::uint64_t>();
        c.tn = pc.at("tn").get<std::uint64_t>();
        r.counts.per_class.push_back(c);
        MetricsSummary::PerClass pm;
        pm.precision = pc.at("precision").get<double>();
        pm.recall = pc.at("recall").get<double>();
        pm.f1 = pc.at("f1").get<double>();
        r.summary.per_class.push_back(pm);
    }
    const auto& roc = j.at("roc");
    r.positive_class = roc.at("positive_class").get<std::size_t>();
    r.roc = points_from_json(roc.at("points"));
    r.roc_auc = roc.at("auc").get<double>();
    r.per_class_auc = roc.at("per_class_auc").get<std::vector<double>>();
    r.macro_auc = roc.at("macro_auc").get<double>();
    r.summary.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.config_echo = j.at("config");
    return r;
}

void validate_report(const nlohmann::json& j) {
    for (const char* key : {"model", "seed", "averaging", "samples", "metrics", "per_class", "roc", "warnings",
                            "config"}) {
        if (!j.contains(key)) throw FormatError(std::string("report is missing key: ") + key);
    }
    const auto& m = j.at("metrics");
    for (const char* key : {"precision", "recall", "accuracy", "f1"}) {
        if (!m.contains(key)) throw FormatError(std::string("report metrics missing key: ") + key);
        const double v = m.at(key).get<double>();
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ConsistencyError(std::string("report metric ") + key + " outside [0, 1]");
        }
    }
    const auto& roc = j.at("roc");
    const auto points = points_from_json(roc.at("points"));
    if (points.empty() || points.front().fpr != 0.0 || points.front().tpr != 0.0 ||
        points.back().fpr != 1.0 || points.back().tpr != 1.0) {
        throw ConsistencyError("report ROC points must start at (0,0) and end at (1,1)");
    }
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].fpr < points[i - 1].fpr || points[i].tpr < points[i - 1].tpr) {
            throw ConsistencyError("report ROC points must be non-decreasing");
        }
    }
    const double a = roc.at("auc").get<double>();
    if (!(a >= 0.0 && a <= 1.0)) throw ConsistencyError("report auc outside [0, 1]");
}

std::string roc_csv(const std::vector<RocPoint>& points) {
    std::string out = "fpr,tpr\n";
    char buf[64];
    for (const RocPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.fpr, p.tpr);
        out += buf;
    }
    return out;
}

std::string roc_svg(const std::vector<std::pair<std::string, std::vector<RocPoint>>>& curves) {
    constexpr int size = 440;
    constexpr int margin = 40;
    constexpr int plot = size - 2 * margin;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    auto px = [&](double fpr) { return margin + fpr * plot; };
    auto py = [&](double tpr) { return size - margin - tpr * plot; };

    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  size, size, size, size);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n",
                  margin, margin, plot, plot);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#999\" "
                  "stroke-dasharray=\"4 4\"/>\n",
                  px(0.0), py(0.0), px(1.0), py(1.0));
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\">false positive rate</text>\n",
                  size / 2, size - 8);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"12\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 12 %d)\">true positive rate</text>\n",
                  size / 2, size / 2);
    svg += buf;

    std::size_t ci = 0;
    for (const auto& [name, points] : curves) {
        const char* color = palette[ci % 6];
        std::string poly;
        for (const RocPoint& p : points) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(p.fpr), py(p.tpr));
            poly += buf;
        }
        std::snprintf(buf, sizeof(buf), "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
                      poly.c_str(), color);
        svg += buf;
        std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%zu\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                      margin + 8, margin + 16 + 16 * ci, color, name.c_str());
        svg += buf;
        ++ci;
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace ganbench
