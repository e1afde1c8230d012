#include "medaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "medaug/errors.hpp"

namespace medaug {

namespace {

struct Group {
    double score = 0.0;
    std::size_t tp = 0;  // cumulative counts at threshold = score
    std::size_t fp = 0;
};

// Distinct scores in descending order with cumulative positive / negative
// counts among predictions scoring >= that threshold.
std::vector<Group> cumulative_groups(const ScoredPredictions& preds) {
    std::vector<std::size_t> order(preds.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds.scores[a] > preds.scores[b];
    });

    std::vector<Group> groups;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double score = preds.scores[order[i]];
        while (i < order.size() && preds.scores[order[i]] == score) {
            if (preds.labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        groups.push_back({score, tp, fp});
    }
    return groups;
}

std::size_t count_positives(const ScoredPredictions& preds) {
    std::size_t n = 0;
    for (int label : preds.labels) n += static_cast<std::size_t>(label == 1);
    return n;
}

}  // namespace

void validate_predictions(const ScoredPredictions& preds, bool need_both_classes) {
    if (preds.scores.size() != preds.labels.size())
        throw ValidationError("scores and labels differ in length");
    if (preds.scores.empty()) throw ValidationError("no predictions to score");
    for (double s : preds.scores)
        if (!std::isfinite(s)) throw ValidationError("scores must be finite");
    for (int label : preds.labels)
        if (label != 0 && label != 1) throw ValidationError("labels must be 0 or 1");
    if (need_both_classes) {
        std::size_t pos = count_positives(preds);
        if (pos == 0 || pos == preds.labels.size())
            throw ValidationError("need at least one positive and one negative");
    }
}

double auroc(const ScoredPredictions& preds) {
    validate_predictions(preds, true);
    std::size_t n = preds.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds.scores[a] < preds.scores[b];
    });

    // Average ranks over tied score runs, 1-based.
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && preds.scores[order[j]] == preds.scores[order[i]]) ++j;
        double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
        i = j;
    }

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (preds.labels[k] == 1) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    }
    std::size_t n_neg = n - n_pos;
    double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auprc(const ScoredPredictions& preds) {
    validate_predictions(preds, false);
    std::size_t n_pos = count_positives(preds);
    if (n_pos == 0) throw ValidationError("average precision needs a positive example");

    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (const Group& g : cumulative_groups(preds)) {
        if (g.tp > prev_tp) {
            double precision = static_cast<double>(g.tp) / static_cast<double>(g.tp + g.fp);
            double delta_recall =
                static_cast<double>(g.tp - prev_tp) / static_cast<double>(n_pos);
            ap += precision * delta_recall;
        }
        prev_tp = g.tp;
    }
    return ap;
}

double recall_at_precision(const ScoredPredictions& preds, double min_precision) {
    validate_predictions(preds, false);
    if (!(min_precision > 0.0) || min_precision > 1.0)
        throw ValidationError("min_precision must lie in (0,1]");
    std::size_t n_pos = count_positives(preds);
    if (n_pos == 0) throw ValidationError("recall needs a positive example");

    double best = 0.0;
    for (const Group& g : cumulative_groups(preds)) {
        double precision = static_cast<double>(g.tp) / static_cast<double>(g.tp + g.fp);
        if (precision >= min_precision) {
            double recall = static_cast<double>(g.tp) / static_cast<double>(n_pos);
            best = std::max(best, recall);
        }
    }
    return best;
}

std::vector<CurvePoint> roc_curve(const ScoredPredictions& preds) {
    validate_predictions(preds, true);
    std::size_t n_pos = count_positives(preds);
    std::size_t n_neg = preds.labels.size() - n_pos;

    std::vector<CurvePoint> points;
    points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    for (const Group& g : cumulative_groups(preds)) {
        points.push_back({g.score, static_cast<double>(g.fp) / static_cast<double>(n_neg),
                          static_cast<double>(g.tp) / static_cast<double>(n_pos)});
    }
    points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
    return points;
}

std::vector<CurvePoint> pr_curve(const ScoredPredictions& preds) {
    validate_predictions(preds, false);
    std::size_t n_pos = count_positives(preds);
    if (n_pos == 0) throw ValidationError("pr curve needs a positive example");

    std::vector<CurvePoint> points;
    points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
    for (const Group& g : cumulative_groups(preds)) {
        points.push_back({g.score, static_cast<double>(g.tp) / static_cast<double>(n_pos),
                          static_cast<double>(g.tp) / static_cast<double>(g.tp + g.fp)});
    }
    double prevalence = static_cast<double>(n_pos) / static_cast<double>(preds.labels.size());
    points.push_back({-std::numeric_limits<double>::infinity(), 1.0, prevalence});
    return points;
}

double trapezoid_area(const std::vector<CurvePoint>& points) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        area += (points[i + 1].x - points[i].x) * 0.5 * (points[i].y + points[i + 1].y);
    }
    return area;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "threshold,x,y\n";
    char buf[96];
    for (const CurvePoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n", p.threshold, p.x, p.y);
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path);
}

MetricsSummary evaluate_all(const ScoredPredictions& preds) {
    MetricsSummary summary;
    summary.auroc = auroc(preds);
    summary.auprc = auprc(preds);
    summary.rp80 = rp80(preds);
    summary.n_pos = count_positives(preds);
    summary.n_neg = preds.labels.size() - summary.n_pos;
    return summary;
}

}  // namespace medaug
