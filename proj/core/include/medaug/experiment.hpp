// Experiment orchestration: enumerates configured cells, runs every
// (cell x seed) pair with shared per-seed artifacts so strategy columns are
// paired, aggregates over seeds, and emits CSV / JSONL / Markdown outputs.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "medaug/config.hpp"
#include "medaug/metrics.hpp"

namespace medaug {

struct MetricAggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev; 0 for a single seed
};

struct ResultRow {
    std::string strategy;
    std::string params;
    std::size_t n_seeds = 0;
    MetricAggregate valid_auroc, valid_auprc, valid_rp80;
    bool with_test = false;
    MetricAggregate test_auroc, test_auprc, test_rp80;
};

struct ResultTable {
    bool with_test = false;
    std::vector<ResultRow> rows;

    std::string to_csv() const;       // header row, comma-separated, %.6f
    std::string to_markdown() const;  // mean ± stddev cells
};

// Executes the configured experiment and writes results.csv, runs.jsonl,
// and summary.md into cfg.output_dir (all atomically). Reruns with the same
// config produce byte-identical files. MEDAUG_THREADS caps the number of
// parallel seed workers. Progress notes go to log when given.
ResultTable run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Rebuilds the aggregate summary (Markdown) from <run_dir>/runs.jsonl.
std::string report_from_run_dir(const std::string& run_dir);

}  // namespace medaug
