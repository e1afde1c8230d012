#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "medaug/metrics.hpp"
#include "medaug/rng.hpp"

using namespace medaug;

namespace {

ScoredPredictions random_predictions(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    ScoredPredictions preds;
    preds.scores.reserve(n);
    preds.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        // grid the scores so tie handling stays on the hot path
        preds.scores.push_back(static_cast<double>(rng.below(1000)) / 1000.0);
        preds.labels.push_back(rng.bernoulli(0.2) ? 1 : 0);
    }
    preds.labels[0] = 1;
    preds.labels[1] = 0;
    return preds;
}

void auroc_ranked(benchmark::State& state) {
    ScoredPredictions preds =
        random_predictions(static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) benchmark::DoNotOptimize(auroc(preds));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(auroc_ranked)->Range(256, 65536)->Complexity(benchmark::oNLogN);

void average_precision(benchmark::State& state) {
    ScoredPredictions preds =
        random_predictions(static_cast<std::size_t>(state.range(0)), 12);
    for (auto _ : state) benchmark::DoNotOptimize(auprc(preds));
}
BENCHMARK(average_precision)->Range(256, 65536);

void recall_at_precision_floor(benchmark::State& state) {
    ScoredPredictions preds =
        random_predictions(static_cast<std::size_t>(state.range(0)), 13);
    for (auto _ : state) benchmark::DoNotOptimize(rp80(preds));
}
BENCHMARK(recall_at_precision_floor)->Range(256, 65536);

void roc_points(benchmark::State& state) {
    ScoredPredictions preds =
        random_predictions(static_cast<std::size_t>(state.range(0)), 14);
    for (auto _ : state) benchmark::DoNotOptimize(roc_curve(preds));
}
BENCHMARK(roc_points)->Range(256, 16384);

}  // namespace
