#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "antiphish/common.hpp"

namespace antiphish {

struct ConfusionMatrix {
    uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    uint64_t total() const { return tp + tn + fp + fn; }
};

inline ConfusionMatrix confusion(const std::vector<int>& y, const std::vector<int>& y_pred) {
    if (y.size() != y_pred.size()) throw LengthMismatch("confusion: length mismatch");
    ConfusionMatrix cm;
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1)
            (y_pred[i] == 1 ? cm.tp : cm.fn)++;
        else
            (y_pred[i] == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    bool degenerate = false;  // a precision/recall denominator was zero
};

inline ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyEvaluation("classification_metrics: empty evaluation");
    ClassificationMetrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0)
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    else
        m.degenerate = true;
    if (cm.tp + cm.fn > 0)
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    else
        m.degenerate = true;
    if (m.precision + m.recall > 0.0)
        m.f_measure = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

// PR points at every distinct score threshold, descending. AUC is the
// Mann-Whitney pairwise statistic: P(score_pos > score_neg) with ties
// counted half, computed from tie-averaged ranks in O(n log n).
struct PrCurve {
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    double auc = 0.0;
};

inline PrCurve pr_curve_and_auc(const std::vector<int>& y, const std::vector<double>& scores) {
    if (y.size() != scores.size()) throw LengthMismatch("pr_curve_and_auc: length mismatch");
    const size_t n = y.size();
    uint64_t pos = 0;
    for (int v : y) pos += (v == 1);
    const uint64_t neg = n - pos;
    if (pos == 0 || neg == 0) throw SingleClassError("pr_curve_and_auc: one class absent");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    // rank-sum with average ranks for ties
    double rank_sum_pos = 0.0;
    for (size_t i = 0; i < n;) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t k = i; k < j; ++k)
            if (y[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    PrCurve out;
    out.auc = (rank_sum_pos - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
              (static_cast<double>(pos) * static_cast<double>(neg));

    // sweep: predict 1 iff score >= threshold
    uint64_t tp = 0, fp = 0;
    for (size_t i = n; i > 0;) {
        size_t j = i;
        double threshold = scores[order[i - 1]];
        while (i > 0 && scores[order[i - 1]] == threshold) {
            if (y[order[i - 1]] == 1) ++tp; else ++fp;
            --i;
        }
        (void)j;
        double recall = static_cast<double>(tp) / static_cast<double>(pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        out.points.emplace_back(recall, precision);
    }
    return out;
}

// MAE (Eq. text semantics): mean absolute difference. MSE by default the
// mean of squared differences; MseForm::HalfSum keeps the literal half-sum
// variant selectable from the CLI.
enum class MseForm { Mean, HalfSum };

inline double mae(const std::vector<double>& y, const std::vector<double>& x) {
    if (y.size() != x.size()) throw LengthMismatch("mae: length mismatch");
    if (y.empty()) throw LengthMismatch("mae: empty input");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - x[i]);
    return s / static_cast<double>(y.size());
}

inline double mse(const std::vector<double>& y, const std::vector<double>& y_hat,
                  MseForm form = MseForm::Mean) {
    if (y.size() != y_hat.size()) throw LengthMismatch("mse: length mismatch");
    if (y.empty()) throw LengthMismatch("mse: empty input");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        double d = y[i] - y_hat[i];
        s += d * d;
    }
    return form == MseForm::Mean ? s / static_cast<double>(y.size()) : 0.5 * s;
}

struct MetricReport {
    ConfusionMatrix cm;
    ClassificationMetrics cls;
    double auc = 0.0;
    double mae_value = 0.0;
    double mse_value = 0.0;
    std::vector<std::pair<double, double>> pr_points;
};

inline MetricReport evaluate_scores(const std::vector<int>& y, const std::vector<double>& scores,
                                    MseForm form = MseForm::Mean) {
    std::vector<int> labels(y.size());
    for (size_t i = 0; i < y.size(); ++i) labels[i] = scores[i] >= 0.5 ? 1 : 0;
    MetricReport r;
    r.cm = confusion(y, labels);
    r.cls = classification_metrics(r.cm);
    PrCurve pr = pr_curve_and_auc(y, scores);
    r.auc = pr.auc;
    r.pr_points = std::move(pr.points);
    std::vector<double> yd(y.size());
    for (size_t i = 0; i < y.size(); ++i) yd[i] = static_cast<double>(y[i]);
    r.mae_value = mae(yd, scores);
    r.mse_value = mse(yd, scores, form);
    return r;
}

}  // namespace antiphish
