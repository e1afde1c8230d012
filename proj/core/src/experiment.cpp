#include "medaug/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "medaug/distiller.hpp"
#include "medaug/errors.hpp"
#include "medaug/fsio.hpp"
#include "medaug/synth_bench.hpp"

namespace medaug {

namespace {

std::string format_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string format_f6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

struct Cell {
    StrategyKind strategy = StrategyKind::base;
    std::size_t count = 0;
    double tau = 0.0;            // medaug only
    double keep_fraction = 0.5;  // confidence_filter only
    PromptMode prompt_mode = PromptMode::with_context;
    bool balanced = true;
    std::size_t d_model = 64;
    bool with_test = false;
    std::string params;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    Cell proto;
    proto.prompt_mode = cfg.plan.prompt_mode;
    proto.balanced = cfg.gen.balanced;
    proto.d_model = cfg.gen.generator.d_model;
    proto.keep_fraction = cfg.keep_fraction;

    switch (cfg.mode) {
        case ExperimentMode::compare_strategies:
            proto.with_test = true;
            for (std::size_t count : cfg.synth_counts) {
                for (StrategyKind strategy : cfg.strategies) {
                    Cell cell = proto;
                    cell.strategy = strategy;
                    cell.count = strategy == StrategyKind::none ? 0 : count;
                    cell.params = "count=" + std::to_string(cell.count);
                    if (strategy == StrategyKind::medaug) {
                        for (double tau : cfg.taus) {
                            Cell m = cell;
                            m.tau = tau;
                            m.params += " tau=" + format_g(tau);
                            cells.push_back(m);
                        }
                    } else {
                        if (strategy == StrategyKind::confidence_filter)
                            cell.params += " keep=" + format_g(cell.keep_fraction);
                        cells.push_back(cell);
                    }
                }
            }
            break;
        case ExperimentMode::synth_count:
            for (std::size_t count : cfg.synth_counts) {
                Cell cell = proto;
                cell.strategy = cfg.strategies.front();
                cell.count = count;
                cell.tau = cfg.taus.front();
                cell.params = "count=" + std::to_string(count);
                cells.push_back(cell);
            }
            break;
        case ExperimentMode::finetune_modes:
            for (PromptMode mode : {PromptMode::with_context, PromptMode::without_context}) {
                for (bool balanced : {true, false}) {
                    Cell cell = proto;
                    cell.strategy = StrategyKind::base;
                    cell.count = cfg.synth_counts.front();
                    cell.prompt_mode = mode;
                    cell.balanced = balanced;
                    cell.params = std::string("prompt=") + to_string(mode) +
                                  " balanced=" + (balanced ? "yes" : "no") +
                                  " count=" + std::to_string(cell.count);
                    cells.push_back(cell);
                }
            }
            break;
        case ExperimentMode::model_size:
            for (std::size_t d : cfg.d_model_sweep) {
                Cell cell = proto;
                cell.strategy = cfg.strategies.front();
                cell.count = cfg.synth_counts.front();
                cell.tau = cfg.taus.front();
                cell.d_model = d;
                cell.params =
                    "d_model=" + std::to_string(d) + " count=" + std::to_string(cell.count);
                cells.push_back(cell);
            }
            break;
    }
    return cells;
}

struct SeedRun {
    MetricsSummary valid;
    std::optional<MetricsSummary> test;
    nlohmann::json record;
};

// All artifacts one seed shares across cells: corpus, tuned generators,
// synthetic pools (max size; cells consume prefixes), and the teacher.
class SeedContext {
  public:
    SeedContext(const ExperimentConfig& cfg, const std::vector<Cell>& cells, std::uint64_t seed)
        : cfg_(cfg), cells_(cells), seed_(seed) {
        SynthBenchSpec bench = cfg.benchmark;
        bench.seed = derive_seed(seed, "bench");
        split_ = make_split(synth_benchmark(bench), cfg.ratios, derive_seed(seed, "split"));
        vocab_ = Vocabulary::build(split_.train, cfg.gen.vocab_min_freq);

        distill_base_.clf = cfg.clf;
        distill_base_.teacher_train = cfg.clf_train_cfg;
        distill_base_.student_train = cfg.clf_train_cfg;
        distill_base_.kl_scope = cfg.kl_scope;
        distill_base_.kl_direction = cfg.kl_direction;
        distill_base_.seed = derive_seed(seed, "distill");
    }

    SeedRun run_cell(const Cell& cell) {
        std::vector<LabeledDocument> combined;
        std::size_t synthetic_used = 0;
        if (cell.strategy == StrategyKind::none || cell.count == 0) {
            combined = split_.train;
        } else {
            const std::vector<LabeledDocument>& pool = pool_for(cell);
            std::vector<LabeledDocument> prefix(
                pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cell.count));
            synthetic_used = prefix.size();
            if (cell.strategy == StrategyKind::confidence_filter) {
                combined = strategy_confidence_filter(split_.train, prefix, cell.keep_fraction,
                                                      derive_seed(seed_, "filter"), cfg_.clf,
                                                      cfg_.clf_train_cfg);
            } else {
                combined = strategy_base(split_.train, prefix);
            }
        }

        DistillConfig dcfg = distill_base_;
        dcfg.tau = cell.strategy == StrategyKind::medaug ? cell.tau : 0.0;
        StudentResult student =
            train_student(vocab_, combined, dcfg.tau > 0.0 ? &teacher() : nullptr, dcfg);

        SeedRun run;
        assert_no_synthetic(split_.valid, "the validation set");
        run.valid = evaluate_all(score_corpus(student.model, split_.valid));
        if (cell.with_test) {
            assert_no_synthetic(split_.test, "the test set");
            run.test = evaluate_all(score_corpus(student.model, split_.test));
        }

        nlohmann::json rec;
        rec["mode"] = to_string(cfg_.mode);
        rec["strategy"] = to_string(cell.strategy);
        rec["params"] = cell.params;
        rec["seed"] = seed_;
        rec["count"] = cell.count;
        rec["prompt_mode"] = to_string(cell.prompt_mode);
        rec["balanced"] = cell.balanced;
        rec["d_model"] = cell.d_model;
        if (cell.strategy == StrategyKind::medaug) {
            rec["tau"] = cell.tau;
            rec["kl_scope"] = to_string(cfg_.kl_scope);
        }
        if (cell.strategy == StrategyKind::confidence_filter)
            rec["keep_fraction"] = cell.keep_fraction;
        rec["sizes"] = {{"train", split_.train.size()},
                        {"synthetic", synthetic_used},
                        {"combined", combined.size()}};
        rec["valid"] = {{"auroc", run.valid.auroc},
                        {"auprc", run.valid.auprc},
                        {"rp80", run.valid.rp80}};
        if (run.test)
            rec["test"] = {{"auroc", run.test->auroc},
                           {"auprc", run.test->auprc},
                           {"rp80", run.test->rp80}};
        rec["hashes"] = {{"train", docs_fingerprint(split_.train)},
                         {"student", model_fingerprint(student.model.parameters())}};
        rec["config_hash"] = config_hash();
        run.record = std::move(rec);
        return run;
    }

    std::string config_hash() const {
        Fnv1a h;
        h.update(cfg_.config_text);
        return h.hex();
    }

  private:
    struct PoolKey {
        std::size_t d_model;
        bool balanced;
        PromptMode mode;
        bool operator<(const PoolKey& o) const {
            if (d_model != o.d_model) return d_model < o.d_model;
            if (balanced != o.balanced) return balanced < o.balanced;
            return mode < o.mode;
        }
    };

    GeneratorModel& generator_for(std::size_t d_model, bool balanced) {
        auto key = std::make_pair(d_model, balanced);
        auto it = generators_.find(key);
        if (it != generators_.end()) return it->second;

        GeneratorConfig gcfg = cfg_.gen.generator;
        gcfg.d_model = d_model;
        GeneratorModel model(vocab_, gcfg, derive_seed(seed_, "generator-init"));
        LmTrainConfig ft = cfg_.gen.finetune;
        ft.seed = derive_seed(seed_, "generator-train");
        lm_finetune(model, split_.train, balanced, ft);
        return generators_.emplace(key, std::move(model)).first->second;
    }

    const std::vector<LabeledDocument>& pool_for(const Cell& cell) {
        PoolKey key{cell.d_model, cell.balanced, cell.prompt_mode};
        auto it = pools_.find(key);
        if (it != pools_.end()) return it->second;

        std::size_t max_count = 0;
        for (const Cell& other : cells_) {
            if (other.strategy == StrategyKind::none) continue;
            if (other.d_model == key.d_model && other.balanced == key.balanced &&
                other.prompt_mode == key.mode)
                max_count = std::max(max_count, other.count);
        }

        AugmentationPlan plan = cfg_.plan;
        plan.count = max_count;
        plan.prompt_mode = key.mode;
        plan.seed = derive_seed(seed_, "generate");
        std::vector<LabeledDocument> pool =
            generate_synthetic(generator_for(key.d_model, key.balanced), plan, split_.train);

        if (cfg_.synthetic_noise > 0.0) {
            Rng noise_rng(derive_seed(seed_, "noise"));
            for (LabeledDocument& doc : pool)
                if (noise_rng.bernoulli(cfg_.synthetic_noise))
                    doc = corrupt_positive(doc, noise_rng, cfg_.benchmark.negative_phrases);
        }
        return pools_.emplace(key, std::move(pool)).first->second;
    }

    const ClassifierModel& teacher() {
        if (!teacher_) teacher_ = pretrain_teacher(vocab_, split_.train, distill_base_);
        return *teacher_;
    }

    const ExperimentConfig& cfg_;
    const std::vector<Cell>& cells_;
    std::uint64_t seed_;
    CorpusSplit split_;
    Vocabulary vocab_;
    DistillConfig distill_base_;
    std::map<std::pair<std::size_t, bool>, GeneratorModel> generators_;
    std::map<PoolKey, std::vector<LabeledDocument>> pools_;
    std::optional<ClassifierModel> teacher_;
};

MetricAggregate aggregate(const std::vector<double>& xs) {
    MetricAggregate agg;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) agg.mean += x;
    agg.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - agg.mean) * (x - agg.mean);
        agg.stddev = std::sqrt(ss / (n - 1.0));
    }
    return agg;
}

std::size_t worker_cap(std::size_t n_seeds) {
    std::size_t cap = std::max<unsigned>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MEDAUG_THREADS")) {
        char* end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end && *end == '\0' && v >= 1) cap = static_cast<std::size_t>(v);
    }
    return std::min(cap, n_seeds);
}

}  // namespace

std::string ResultTable::to_csv() const {
    std::string out =
        "strategy,params,seeds,valid_auroc_mean,valid_auroc_std,valid_auprc_mean,"
        "valid_auprc_std,valid_rp80_mean,valid_rp80_std";
    if (with_test)
        out += ",test_auroc_mean,test_auroc_std,test_auprc_mean,test_auprc_std,"
               "test_rp80_mean,test_rp80_std";
    out += '\n';
    for (const ResultRow& row : rows) {
        out += row.strategy;
        out += ',';
        out += row.params;
        out += ',';
        out += std::to_string(row.n_seeds);
        for (const MetricAggregate* agg :
             {&row.valid_auroc, &row.valid_auprc, &row.valid_rp80}) {
            out += ',';
            out += format_f6(agg->mean);
            out += ',';
            out += format_f6(agg->stddev);
        }
        if (with_test) {
            for (const MetricAggregate* agg :
                 {&row.test_auroc, &row.test_auprc, &row.test_rp80}) {
                out += ',';
                out += format_f6(agg->mean);
                out += ',';
                out += format_f6(agg->stddev);
            }
        }
        out += '\n';
    }
    return out;
}

std::string ResultTable::to_markdown() const {
    auto cell = [](const MetricAggregate& agg) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", agg.mean, agg.stddev);
        return std::string(buf);
    };
    std::string out = "| strategy | params | seeds | valid AUROC | valid AUPRC | valid RP80 |";
    std::string rule = "|---|---|---|---|---|---|";
    if (with_test) {
        out += " test AUROC | test AUPRC | test RP80 |";
        rule += "---|---|---|";
    }
    out += '\n';
    out += rule;
    out += '\n';
    for (const ResultRow& row : rows) {
        out += "| " + row.strategy + " | " + row.params + " | " + std::to_string(row.n_seeds) +
               " | " + cell(row.valid_auroc) + " | " + cell(row.valid_auprc) + " | " +
               cell(row.valid_rp80) + " |";
        if (with_test)
            out += " " + cell(row.test_auroc) + " | " + cell(row.test_auprc) + " | " +
                   cell(row.test_rp80) + " |";
        out += '\n';
    }
    return out;
}

ResultTable run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    const std::vector<Cell> cells = enumerate_cells(cfg);
    if (cells.empty()) throw ValidationError("experiment enumerates no cells");

    // seed-major worker pool; each worker owns one seed's shared artifacts
    std::vector<std::vector<SeedRun>> by_seed(cfg.seeds.size());
    std::vector<std::exception_ptr> failures(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto work = [&]() {
        for (;;) {
            std::size_t si = next.fetch_add(1);
            if (si >= cfg.seeds.size()) return;
            try {
                SeedContext ctx(cfg, cells, cfg.seeds[si]);
                std::vector<SeedRun> runs;
                runs.reserve(cells.size());
                for (std::size_t ci = 0; ci < cells.size(); ++ci) {
                    runs.push_back(ctx.run_cell(cells[ci]));
                    if (log) {
                        std::lock_guard<std::mutex> guard(log_mutex);
                        *log << "seed " << cfg.seeds[si] << " cell " << (ci + 1) << "/"
                             << cells.size() << " " << to_string(cells[ci].strategy) << " ["
                             << cells[ci].params << "] valid auroc "
                             << format_f6(runs.back().valid.auroc) << "\n";
                    }
                }
                by_seed[si] = std::move(runs);
            } catch (...) {
                failures[si] = std::current_exception();
            }
        }
    };

    std::size_t n_workers = worker_cap(cfg.seeds.size());
    if (n_workers <= 1) {
        work();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(work);
        for (std::thread& t : workers) t.join();
    }
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);

    ResultTable table;
    table.with_test = cells.front().with_test;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        ResultRow row;
        row.strategy = to_string(cells[ci].strategy);
        row.params = cells[ci].params;
        row.n_seeds = cfg.seeds.size();
        std::vector<double> va, vp, vr, ta, tp, tr;
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            const SeedRun& run = by_seed[si][ci];
            va.push_back(run.valid.auroc);
            vp.push_back(run.valid.auprc);
            vr.push_back(run.valid.rp80);
            if (run.test) {
                ta.push_back(run.test->auroc);
                tp.push_back(run.test->auprc);
                tr.push_back(run.test->rp80);
            }
        }
        row.valid_auroc = aggregate(va);
        row.valid_auprc = aggregate(vp);
        row.valid_rp80 = aggregate(vr);
        row.with_test = !ta.empty();
        if (row.with_test) {
            row.test_auroc = aggregate(ta);
            row.test_auprc = aggregate(tp);
            row.test_rp80 = aggregate(tr);
        }
        table.rows.push_back(std::move(row));
    }

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const std::string dir = cfg.output_dir;

    write_file_atomic(dir + "/results.csv", table.to_csv());

    std::string jsonl;
    for (std::size_t ci = 0; ci < cells.size(); ++ci)
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si)
            jsonl += by_seed[si][ci].record.dump() + "\n";
    write_file_atomic(dir + "/runs.jsonl", jsonl);

    Fnv1a h;
    h.update(cfg.config_text);
    std::string summary = "# Experiment summary\n\n";
    summary += "- mode: " + std::string(to_string(cfg.mode)) + "\n";
    summary += "- config hash: " + h.hex() + "\n";
    summary += "- seeds:";
    for (std::uint64_t seed : cfg.seeds) summary += " " + std::to_string(seed);
    summary += "\n- benchmark: " + std::to_string(cfg.benchmark.n_docs) + " docs, prior " +
               format_g(cfg.benchmark.positive_prior) + ", label noise " +
               format_g(cfg.benchmark.label_noise) + ", synthetic noise " +
               format_g(cfg.synthetic_noise) + "\n\n";
    summary += table.to_markdown();
    write_file_atomic(dir + "/summary.md", summary);

    return table;
}

std::string report_from_run_dir(const std::string& run_dir) {
    const std::string path = run_dir + "/runs.jsonl";
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    struct Group {
        std::string strategy;
        std::string params;
        std::vector<double> va, vp, vr, ta, tp, tr;
    };
    std::vector<Group> groups;
    std::map<std::string, std::size_t> index;

    std::string line;
    std::size_t line_no = 0;
    std::string mode = "?";
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid run record: ") + e.what(), line_no);
        }
        if (!rec.contains("strategy") || !rec.contains("params") || !rec.contains("valid"))
            throw ParseError("run record missing strategy/params/valid", line_no);
        mode = rec.value("mode", mode);
        std::string key = rec["strategy"].get<std::string>() + "\x1f" +
                          rec["params"].get<std::string>();
        auto [it, inserted] = index.emplace(key, groups.size());
        if (inserted) {
            groups.push_back(
                {rec["strategy"].get<std::string>(), rec["params"].get<std::string>(),
                 {}, {}, {}, {}, {}, {}});
        }
        Group& group = groups[it->second];
        group.va.push_back(rec["valid"]["auroc"].get<double>());
        group.vp.push_back(rec["valid"]["auprc"].get<double>());
        group.vr.push_back(rec["valid"]["rp80"].get<double>());
        if (rec.contains("test")) {
            group.ta.push_back(rec["test"]["auroc"].get<double>());
            group.tp.push_back(rec["test"]["auprc"].get<double>());
            group.tr.push_back(rec["test"]["rp80"].get<double>());
        }
    }
    if (groups.empty()) throw ValidationError("no run records in " + path);

    ResultTable table;
    for (Group& group : groups) {
        ResultRow row;
        row.strategy = group.strategy;
        row.params = group.params;
        row.n_seeds = group.va.size();
        row.valid_auroc = aggregate(group.va);
        row.valid_auprc = aggregate(group.vp);
        row.valid_rp80 = aggregate(group.vr);
        row.with_test = !group.ta.empty();
        if (row.with_test) {
            row.test_auroc = aggregate(group.ta);
            row.test_auprc = aggregate(group.tp);
            row.test_rp80 = aggregate(group.tr);
        }
        table.with_test = table.with_test || row.with_test;
        table.rows.push_back(std::move(row));
    }

    std::string out = "# Run report\n\n- mode: " + mode + "\n\n" + table.to_markdown();
    return out;
}

}  // namespace medaug
