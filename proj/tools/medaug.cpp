// Command-line front end: corpus generation, LM training / sampling,
// classifier training, augmentation, the full pipeline, evaluation, and the
// multi-seed experiment runner.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "medaug/augmentor.hpp"
#include "medaug/checkpoint.hpp"
#include "medaug/classifier.hpp"
#include "medaug/config.hpp"
#include "medaug/corpus.hpp"
#include "medaug/distiller.hpp"
#include "medaug/errors.hpp"
#include "medaug/experiment.hpp"
#include "medaug/fsio.hpp"
#include "medaug/genlm.hpp"
#include "medaug/metrics.hpp"
#include "medaug/rng.hpp"
#include "medaug/synth_bench.hpp"
#include "medaug/vocab.hpp"

namespace {

using namespace medaug;

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void print_metrics(const std::string& name, const MetricsSummary& m) {
    std::cout << name << ": auroc=" << fmt6(m.auroc) << " auprc=" << fmt6(m.auprc)
              << " rp80=" << fmt6(m.rp80) << " (" << m.n_pos << " pos / " << m.n_neg
              << " neg)\n";
}

void setup_corpus_gen(CLI::App& parent) {
    struct Opts {
        SynthBenchSpec spec;
        std::string out;
        std::string split_dir;
        double valid_frac = 0.1;
        double test_frac = 0.1;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = parent.add_subcommand("gen", "Generate a signal-phrase benchmark corpus");
    cmd->add_option("--out", opts->out, "Write the whole corpus to this JSONL file");
    cmd->add_option("--split-dir", opts->split_dir,
                    "Write train/valid/test JSONL files into this directory");
    cmd->add_option("--n-docs", opts->spec.n_docs, "Number of documents");
    cmd->add_option("--content-vocab", opts->spec.content_vocab, "Filler token inventory size");
    cmd->add_option("--positive-phrases", opts->spec.positive_phrases,
                    "Positive signal phrase inventory size");
    cmd->add_option("--negative-phrases", opts->spec.negative_phrases,
                    "Negative signal phrase inventory size");
    cmd->add_option("--len-min", opts->spec.len_min, "Minimum filler tokens per document");
    cmd->add_option("--len-max", opts->spec.len_max, "Maximum filler tokens per document");
    cmd->add_option("--positive-prior", opts->spec.positive_prior,
                    "Probability of the positive latent class");
    cmd->add_option("--label-noise", opts->spec.label_noise, "Stored-label flip rate");
    cmd->add_option("--valid-frac", opts->valid_frac, "Validation fraction for --split-dir");
    cmd->add_option("--test-frac", opts->test_frac, "Test fraction for --split-dir");
    cmd->add_option("--seed", opts->spec.seed, "Corpus seed");
    cmd->callback([opts] {
        if (opts->out.empty() && opts->split_dir.empty())
            throw ValidationError("corpus gen needs --out and/or --split-dir");
        validate(opts->spec);
        std::vector<LabeledDocument> docs = synth_benchmark(opts->spec);
        std::cout << "generated " << docs.size() << " docs, " << count_label(docs, 1)
                  << " positive\n";
        if (!opts->out.empty()) {
            save_jsonl(docs, opts->out);
            std::cout << "wrote " << opts->out << '\n';
        }
        if (!opts->split_dir.empty()) {
            SplitRatios ratios{1.0 - opts->valid_frac - opts->test_frac, opts->valid_frac,
                               opts->test_frac};
            if (ratios.train <= 0.0)
                throw ValidationError("--valid-frac plus --test-frac must leave room for train");
            CorpusSplit split = make_split(docs, ratios, derive_seed(opts->spec.seed, "split"));
            std::filesystem::create_directories(opts->split_dir);
            std::filesystem::path dir(opts->split_dir);
            save_jsonl(split.train, (dir / "train.jsonl").string());
            save_jsonl(split.valid, (dir / "valid.jsonl").string());
            save_jsonl(split.test, (dir / "test.jsonl").string());
            std::cout << "wrote split " << split.train.size() << '/' << split.valid.size() << '/'
                      << split.test.size() << " under " << opts->split_dir << '\n';
        }
    });
}

void setup_lm_train(CLI::App& parent) {
    struct Opts {
        std::string corpus;
        std::string out;
        bool balanced = false;
        std::size_t vocab_min_freq = 1;
        GeneratorConfig gen;
        LmTrainConfig train;
        std::uint64_t seed = 1;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = parent.add_subcommand("train", "Fine-tune the generator on a labeled corpus");
    cmd->add_option("--corpus", opts->corpus, "Training corpus (JSONL)")->required();
    cmd->add_option("--out", opts->out, "Checkpoint output path")->required();
    cmd->add_flag("--balanced,!--no-balanced", opts->balanced,
                  "Under-sample the majority class first");
    cmd->add_option("--vocab-min-freq", opts->vocab_min_freq, "Minimum token frequency");
    cmd->add_option("--d-model", opts->gen.d_model, "Model width");
    cmd->add_option("--n-heads", opts->gen.n_heads, "Attention heads");
    cmd->add_option("--n-blocks", opts->gen.n_blocks, "Transformer blocks");
    cmd->add_option("--context-len", opts->gen.context_len, "Maximum sequence length");
    cmd->add_option("--ffn-mult", opts->gen.ffn_mult, "Feed-forward width multiplier");
    cmd->add_option("--init-scale", opts->gen.init_scale, "Weight init scale");
    cmd->add_option("--epochs", opts->train.epochs, "Training epochs");
    cmd->add_option("--lr", opts->train.learning_rate, "Adam learning rate");
    cmd->add_option("--batch-size", opts->train.batch_size, "Batch size");
    cmd->add_option("--seed", opts->seed, "Master seed");
    cmd->callback([opts] {
        std::vector<LabeledDocument> docs = load_jsonl(opts->corpus);
        Vocabulary vocab = Vocabulary::build(docs, opts->vocab_min_freq);
        GeneratorModel model(vocab, opts->gen, derive_seed(opts->seed, "generator-init"));
        LmTrainConfig train = opts->train;
        train.seed = derive_seed(opts->seed, "generator-train");
        std::size_t used = lm_finetune(model, docs, opts->balanced, train);
        save_checkpoint(opts->out, model.to_checkpoint());
        std::cout << "trained on " << used << " docs, vocab " << vocab.size()
                  << ", train perplexity " << fmt6(perplexity(model, docs)) << '\n';
        std::cout << "wrote " << opts->out << '\n';
    });
}

void setup_lm_sample(CLI::App& parent) {
    struct Opts {
        std::string ckpt;
        std::size_t count = 1;
        int label = 1;
        std::string context;
        double temperature = 1.0;
        std::size_t top_k = 40;
        std::size_t max_len = 64;
        std::uint64_t seed = 1;
        std::string out;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = parent.add_subcommand("sample", "Draw documents from a tuned generator");
    cmd->add_option("--ckpt", opts->ckpt, "Generator checkpoint")->required();
    cmd->add_option("--count", opts->count, "Number of samples");
    cmd->add_option("--label", opts->label, "Conditioning label (0 or 1)");
    cmd->add_option("--context", opts->context, "Prompt continuation context");
    cmd->add_option("--temperature", opts->temperature, "Sampling temperature");
    cmd->add_option("--top-k", opts->top_k, "Top-k cutoff");
    cmd->add_option("--max-len", opts->max_len, "Sequence length cap, prompt included");
    cmd->add_option("--seed", opts->seed, "Sampling seed");
    cmd->add_option("--out", opts->out, "Write samples to this JSONL file instead of stdout");
    cmd->callback([opts] {
        GeneratorModel model = GeneratorModel::from_checkpoint(load_checkpoint(opts->ckpt));
        PromptSpec base{opts->label,       tokenize(opts->context), opts->temperature,
                        opts->top_k,       opts->max_len,           opts->seed};
        std::vector<LabeledDocument> docs;
        docs.reserve(opts->count);
        for (std::size_t i = 0; i < opts->count; ++i) {
            PromptSpec prompt = base;
            prompt.seed = derive_seed(opts->seed, "sample-" + std::to_string(i));
            docs.push_back(sample(model, prompt));
        }
        if (opts->out.empty()) {
            for (const LabeledDocument& doc : docs)
                std::cout << doc.label << '\t' << doc.text << '\n';
        } else {
            save_jsonl(docs, opts->out);
            std::cout << "wrote " << docs.size() << " samples to " << opts->out << '\n';
        }
    });
}

void setup_clf_train(CLI::App& parent) {
    struct Opts {
        std::string corpus;
        std::string out;
        std::string eval;
        std::size_t vocab_min_freq = 1;
        ClassifierConfig clf;
        ClfTrainConfig train;
        std::uint64_t seed = 1;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = parent.add_subcommand("train", "Train the outcome classifier");
    cmd->add_option("--corpus", opts->corpus, "Training corpus (JSONL)")->required();
    cmd->add_option("--out", opts->out, "Checkpoint output path")->required();
    cmd->add_option("--eval", opts->eval, "Score this corpus after training");
    cmd->add_option("--vocab-min-freq", opts->vocab_min_freq, "Minimum token frequency");
    cmd->add_option("--embed-dim", opts->clf.embed_dim, "Embedding width");
    cmd->add_option("--hidden-dim", opts->clf.hidden_dim, "Hidden layer width");
    cmd->add_option("--init-scale", opts->clf.init_scale, "Weight init scale");
    cmd->add_option("--epochs", opts->train.epochs, "Training epochs");
    cmd->add_option("--lr", opts->train.learning_rate, "Adam learning rate");
    cmd->add_option("--batch-size", opts->train.batch_size, "Batch size");
    cmd->add_option("--seed", opts->seed, "Master seed");
    cmd->callback([opts] {
        std::vector<LabeledDocument> docs = load_jsonl(opts->corpus);
        Vocabulary vocab = Vocabulary::build(docs, opts->vocab_min_freq);
        ClassifierModel model(vocab, opts->clf, derive_seed(opts->seed, "clf-init"));
        ClfTrainConfig train = opts->train;
        train.seed = derive_seed(opts->seed, "clf-train");
        std::vector<double> losses = clf_train(model, docs, train);
        save_checkpoint(opts->out, model.to_checkpoint());
        std::cout << "trained " << losses.size() << " epochs, final loss "
                  << fmt6(losses.back()) << '\n';
        std::cout << "wrote " << opts->out << '\n';
        if (!opts->eval.empty())
            print_metrics(opts->eval, evaluate_all(score_corpus(model, load_jsonl(opts->eval))));
    });
}

void setup_augment(CLI::App& app) {
    struct Opts {
        std::string ckpt;
        std::string train;
        std::string out;
        std::string report;
        AugmentationPlan plan;
        std::string strategy = "base";
        std::string prompt_mode = "with_context";
        std::string kl_scope = "all_samples";
        double keep_fraction = 0.5;
        double tau = 1.0;
    };
    auto opts = std::make_shared<Opts>();
    opts->plan.count = 100;
    CLI::App* cmd = app.add_subcommand(
        "augment", "Generate synthetic positives and combine them with the training set");
    cmd->add_option("--ckpt", opts->ckpt, "Tuned generator checkpoint")->required();
    cmd->add_option("--train", opts->train, "Training corpus (JSONL)")->required();
    cmd->add_option("--out", opts->out, "Combined corpus output (JSONL)")->required();
    cmd->add_option("--report", opts->report, "Provenance report output (JSON)");
    cmd->add_option("--count", opts->plan.count, "Synthetic documents to produce");
    cmd->add_option("--strategy", opts->strategy, "none | base | confidence_filter | medaug");
    cmd->add_option("--keep-fraction", opts->keep_fraction,
                    "Fraction kept by the confidence filter");
    cmd->add_option("--tau", opts->tau, "Consistency weight recorded for medaug");
    cmd->add_option("--kl-scope", opts->kl_scope, "all_samples | synthetic_only");
    cmd->add_option("--prompt-mode", opts->prompt_mode, "with_context | without_context");
    cmd->add_flag("--dedup,!--no-dedup", opts->plan.dedup, "Drop repeated generated texts");
    cmd->add_option("--temperature", opts->plan.temperature, "Sampling temperature");
    cmd->add_option("--top-k", opts->plan.top_k, "Top-k cutoff");
    cmd->add_option("--max-len", opts->plan.max_len, "Sequence length cap");
    cmd->add_option("--seed", opts->plan.seed, "Generation seed");
    cmd->callback([opts] {
        GeneratorModel model = GeneratorModel::from_checkpoint(load_checkpoint(opts->ckpt));
        CorpusSplit split;
        split.train = load_jsonl(opts->train);
        AugmentationPlan plan = opts->plan;
        plan.prompt_mode = prompt_mode_from_string(opts->prompt_mode);
        StrategyChoice choice{strategy_kind_from_string(opts->strategy), opts->keep_fraction,
                              opts->tau, kl_scope_from_string(opts->kl_scope)};
        AugmentationOutcome outcome = run_augmentation(split, model, plan, choice);
        save_jsonl(outcome.combined, opts->out);
        std::cout << opts->strategy << ": requested " << outcome.requested << ", realized "
                  << outcome.realized << ", kept " << outcome.kept << ", combined "
                  << outcome.combined.size() << '\n';
        if (outcome.kl_flag)
            std::cout << "train the downstream classifier with consistency control\n";
        std::cout << "wrote " << opts->out << '\n';
        if (opts->report.empty()) {
            std::cout << outcome.report_json << '\n';
        } else {
            write_file_atomic(opts->report, outcome.report_json + "\n");
            std::cout << "wrote " << opts->report << '\n';
        }
    });
}

void setup_distill(CLI::App& app) {
    struct Opts {
        std::string train;
        std::string valid;
        std::string test;
        std::string out;
        std::string report;
        GeneratorTrainSetup gen;
        AugmentationPlan plan;
        DistillConfig distill;
        std::string prompt_mode = "with_context";
        std::string kl_scope = "all_samples";
        std::string kl_direction = "teacher_student";
        std::uint64_t seed = 1;
    };
    auto opts = std::make_shared<Opts>();
    opts->plan.count = 900;
    CLI::App* cmd = app.add_subcommand(
        "distill", "Run the full pipeline: tune generator, generate, train teacher and student");
    cmd->add_option("--train", opts->train, "Training corpus (JSONL)")->required();
    cmd->add_option("--valid", opts->valid, "Validation corpus (JSONL)")->required();
    cmd->add_option("--test", opts->test, "Test corpus (JSONL)")->required();
    cmd->add_option("--out", opts->out, "Student checkpoint output path")->required();
    cmd->add_option("--report", opts->report, "Pipeline report output (JSON)");
    cmd->add_option("--count", opts->plan.count, "Synthetic documents to produce");
    cmd->add_option("--prompt-mode", opts->prompt_mode, "with_context | without_context");
    cmd->add_flag("--dedup,!--no-dedup", opts->plan.dedup, "Drop repeated generated texts");
    cmd->add_option("--temperature", opts->plan.temperature, "Sampling temperature");
    cmd->add_option("--top-k", opts->plan.top_k, "Top-k cutoff");
    cmd->add_option("--max-len", opts->plan.max_len, "Sequence length cap");
    cmd->add_option("--tau", opts->distill.tau, "Consistency weight");
    cmd->add_option("--kl-scope", opts->kl_scope, "all_samples | synthetic_only");
    cmd->add_option("--kl-direction", opts->kl_direction, "teacher_student | student_teacher");
    cmd->add_flag("--balanced,!--no-balanced", opts->gen.balanced,
                  "Under-sample before generator fine-tuning");
    cmd->add_option("--vocab-min-freq", opts->gen.vocab_min_freq, "Minimum token frequency");
    cmd->add_option("--d-model", opts->gen.generator.d_model, "Generator width");
    cmd->add_option("--n-heads", opts->gen.generator.n_heads, "Attention heads");
    cmd->add_option("--n-blocks", opts->gen.generator.n_blocks, "Transformer blocks");
    cmd->add_option("--context-len", opts->gen.generator.context_len, "Maximum sequence length");
    cmd->add_option("--ffn-mult", opts->gen.generator.ffn_mult, "Feed-forward width multiplier");
    cmd->add_option("--gen-epochs", opts->gen.finetune.epochs, "Generator epochs");
    cmd->add_option("--gen-lr", opts->gen.finetune.learning_rate, "Generator learning rate");
    cmd->add_option("--gen-batch-size", opts->gen.finetune.batch_size, "Generator batch size");
    cmd->add_option("--embed-dim", opts->distill.clf.embed_dim, "Classifier embedding width");
    cmd->add_option("--hidden-dim", opts->distill.clf.hidden_dim, "Classifier hidden width");
    cmd->add_option("--clf-epochs", opts->distill.student_train.epochs, "Classifier epochs");
    cmd->add_option("--clf-lr", opts->distill.student_train.learning_rate,
                    "Classifier learning rate");
    cmd->add_option("--clf-batch-size", opts->distill.student_train.batch_size,
                    "Classifier batch size");
    cmd->add_option("--seed", opts->seed, "Master seed; every stage derives from it");
    cmd->callback([opts] {
        CorpusSplit split;
        split.train = load_jsonl(opts->train);
        split.valid = load_jsonl(opts->valid);
        split.test = load_jsonl(opts->test);
        AugmentationPlan plan = opts->plan;
        plan.prompt_mode = prompt_mode_from_string(opts->prompt_mode);
        DistillConfig distill = opts->distill;
        distill.kl_scope = kl_scope_from_string(opts->kl_scope);
        distill.kl_direction = kl_direction_from_string(opts->kl_direction);
        distill.teacher_train = distill.student_train;
        PipelineResult result = medaug_pipeline(split, opts->gen, plan, distill, opts->seed);
        save_checkpoint(opts->out, result.student.to_checkpoint());
        for (const auto& stage : result.report.at("stages"))
            if (stage.at("stage") == "evaluate")
                for (const char* part : {"valid", "test"})
                    std::cout << part << ": auroc="
                              << fmt6(stage.at(part).at("auroc").get<double>())
                              << " auprc=" << fmt6(stage.at(part).at("auprc").get<double>())
                              << " rp80=" << fmt6(stage.at(part).at("rp80").get<double>())
                              << '\n';
        std::cout << "wrote " << opts->out << '\n';
        if (!opts->report.empty()) {
            write_file_atomic(opts->report, result.report.dump(2) + "\n");
            std::cout << "wrote " << opts->report << '\n';
        }
    });
}

void setup_eval(CLI::App& app) {
    struct Opts {
        std::string ckpt;
        std::string corpus;
        std::string roc;
        std::string pr;
        std::string scores;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = app.add_subcommand("eval", "Score a classifier checkpoint on a corpus");
    cmd->add_option("--ckpt", opts->ckpt, "Classifier checkpoint")->required();
    cmd->add_option("--corpus", opts->corpus, "Evaluation corpus (JSONL)")->required();
    cmd->add_option("--roc", opts->roc, "Write the ROC curve to this CSV file");
    cmd->add_option("--pr", opts->pr, "Write the PR curve to this CSV file");
    cmd->add_option("--scores", opts->scores, "Write per-document scores to this CSV file");
    cmd->callback([opts] {
        ClassifierModel model = ClassifierModel::from_checkpoint(load_checkpoint(opts->ckpt));
        std::vector<LabeledDocument> docs = load_jsonl(opts->corpus);
        ScoredPredictions preds = score_corpus(model, docs);
        print_metrics(opts->corpus, evaluate_all(preds));
        if (!opts->roc.empty()) write_curve_csv(opts->roc, roc_curve(preds));
        if (!opts->pr.empty()) write_curve_csv(opts->pr, pr_curve(preds));
        if (!opts->scores.empty()) {
            std::string csv = "id,label,score\n";
            for (std::size_t i = 0; i < docs.size(); ++i) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.12g", preds.scores[i]);
                csv += docs[i].id + ',' + std::to_string(preds.labels[i]) + ',' + buf + '\n';
            }
            write_file_atomic(opts->scores, csv);
        }
    });
}

void setup_experiment_run(CLI::App& parent) {
    struct Opts {
        std::string config;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = parent.add_subcommand("run", "Run every cell of a configured experiment");
    cmd->add_option("--config", opts->config, "Experiment configuration (INI)")->required();
    cmd->callback([opts] {
        ExperimentConfig cfg = load_experiment_config(opts->config);
        ResultTable table = run_experiment(cfg, &std::cerr);
        std::cout << table.to_markdown();
        std::cout << "run artifacts in " << cfg.output_dir << '\n';
    });
}

void setup_report(CLI::App& app) {
    struct Opts {
        std::string run_dir;
    };
    auto opts = std::make_shared<Opts>();
    CLI::App* cmd = app.add_subcommand("report", "Summarize a finished run directory");
    cmd->add_option("--run-dir", opts->run_dir, "Directory holding runs.jsonl")->required();
    cmd->callback([opts] { std::cout << report_from_run_dir(opts->run_dir); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label-conditioned text augmentation workbench"};
    app.require_subcommand(1);

    CLI::App* corpus = app.add_subcommand("corpus", "Benchmark corpus utilities");
    corpus->require_subcommand(1);
    setup_corpus_gen(*corpus);

    CLI::App* lm = app.add_subcommand("lm", "Generator language model");
    lm->require_subcommand(1);
    setup_lm_train(*lm);
    setup_lm_sample(*lm);

    CLI::App* clf = app.add_subcommand("clf", "Outcome classifier");
    clf->require_subcommand(1);
    setup_clf_train(*clf);

    setup_augment(app);
    setup_distill(app);
    setup_eval(app);

    CLI::App* experiment = app.add_subcommand("experiment", "Multi-seed experiment runner");
    experiment->require_subcommand(1);
    setup_experiment_run(*experiment);

    setup_report(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "medaug: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
