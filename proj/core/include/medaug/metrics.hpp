// Ranking metrics for binary classifiers: AUROC, average precision, and
// recall at a precision floor, plus exportable ROC / PR curves.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace medaug {

struct ScoredPredictions {
    std::vector<double> scores;
    std::vector<int> labels;
};

// Throws ValidationError on size mismatch, empty input, non-finite scores,
// or non-binary labels. When need_both_classes is set, also requires at
// least one positive and one negative.
void validate_predictions(const ScoredPredictions& preds, bool need_both_classes);

// Mann-Whitney formulation with average ranks, so ties contribute 1/2.
double auroc(const ScoredPredictions& preds);

// Average precision: step-summed precision over recall, tied scores grouped.
double auprc(const ScoredPredictions& preds);

// Maximum recall over thresholds whose precision reaches min_precision.
// Thresholds are the distinct scores; score >= threshold predicts positive.
// Returns 0 when no threshold qualifies.
double recall_at_precision(const ScoredPredictions& preds, double min_precision);

inline double rp80(const ScoredPredictions& preds) {
    return recall_at_precision(preds, 0.80);
}

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;
    double y = 0.0;
};

// ROC points (x = FPR, y = TPR), threshold descending from an infinite
// sentinel at (0,0) down to the lowest score at (1,1).
std::vector<CurvePoint> roc_curve(const ScoredPredictions& preds);

// PR points (x = recall, y = precision), threshold descending from an
// infinite sentinel at recall 0 / precision 1.
std::vector<CurvePoint> pr_curve(const ScoredPredictions& preds);

// Trapezoidal integral of y over x. For roc_curve output this equals auroc.
double trapezoid_area(const std::vector<CurvePoint>& points);

// Writes "threshold,x,y" rows; plain ASCII, '.' decimal separator.
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points);

struct MetricsSummary {
    double auroc = 0.0;
    double auprc = 0.0;
    double rp80 = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

MetricsSummary evaluate_all(const ScoredPredictions& preds);

}  // namespace medaug
