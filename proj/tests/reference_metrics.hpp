// Naive reference implementations of the ranking metrics, deliberately
// independent of the library's algorithms (no ranks, no cumulative sums):
// quadratic pairwise counting and full per-threshold rescans. Shared by the
// unit tests and the acceptance run.
#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "medaug/metrics.hpp"
#include "medaug/rng.hpp"

namespace refmetrics {

// P(score+ > score-) + 1/2 P(score+ = score-) by counting every pair.
inline double ref_auroc(const medaug::ScoredPredictions& p) {
    double wins = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        if (p.labels[i] != 1) continue;
        ++n_pos;
        for (std::size_t j = 0; j < p.labels.size(); ++j) {
            if (p.labels[j] != 0) continue;
            if (p.scores[i] > p.scores[j])
                wins += 1.0;
            else if (p.scores[i] == p.scores[j])
                wins += 0.5;
        }
    }
    n_neg = p.labels.size() - n_pos;
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline std::vector<double> distinct_thresholds_desc(const std::vector<double>& scores) {
    std::vector<double> t = scores;
    std::sort(t.begin(), t.end(), std::greater<>());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

struct ThresholdTally {
    std::size_t tp = 0;
    std::size_t fp = 0;
};

// Counts by rescanning the whole input: predicted positive iff score >= t.
inline ThresholdTally tally_at(const medaug::ScoredPredictions& p, double t) {
    ThresholdTally tally;
    for (std::size_t i = 0; i < p.scores.size(); ++i) {
        if (p.scores[i] < t) continue;
        if (p.labels[i] == 1)
            ++tally.tp;
        else
            ++tally.fp;
    }
    return tally;
}

// Average precision as the step sum over descending distinct thresholds.
inline double ref_ap(const medaug::ScoredPredictions& p) {
    std::size_t n_pos = 0;
    for (int lab : p.labels) n_pos += lab == 1;
    double ap = 0.0;
    double prev_recall = 0.0;
    for (double t : distinct_thresholds_desc(p.scores)) {
        ThresholdTally tally = tally_at(p, t);
        double recall = static_cast<double>(tally.tp) / static_cast<double>(n_pos);
        double precision =
            static_cast<double>(tally.tp) / static_cast<double>(tally.tp + tally.fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// Exhaustive scan: best recall among thresholds whose precision reaches the
// floor, precision compared in division form.
inline double ref_recall_at_precision(const medaug::ScoredPredictions& p,
                                      double min_precision) {
    std::size_t n_pos = 0;
    for (int lab : p.labels) n_pos += lab == 1;
    double best = 0.0;
    for (double t : distinct_thresholds_desc(p.scores)) {
        ThresholdTally tally = tally_at(p, t);
        if (tally.tp + tally.fp == 0) continue;
        double precision =
            static_cast<double>(tally.tp) / static_cast<double>(tally.tp + tally.fp);
        if (precision >= min_precision)
            best = std::max(best, static_cast<double>(tally.tp) / static_cast<double>(n_pos));
    }
    return best;
}

// Random score/label instance; half the time scores land on a coarse grid
// so ties actually occur.
inline medaug::ScoredPredictions random_instance(medaug::Rng& rng, std::size_t max_n) {
    medaug::ScoredPredictions p;
    std::size_t n = 2 + rng.index(max_n - 1);
    bool gridded = rng.bernoulli(0.5);
    p.scores.reserve(n);
    p.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = gridded ? static_cast<double>(rng.index(11)) / 10.0 : rng.uniform();
        p.scores.push_back(s);
        p.labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
    }
    // both classes must appear
    p.labels[0] = 1;
    p.labels[1] = 0;
    return p;
}

}  // namespace refmetrics
