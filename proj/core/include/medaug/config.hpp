// Flat sectioned key=value configuration (INI-style) and the experiment
// description it maps onto. Parse errors carry the offending line number.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "medaug/augmentor.hpp"
#include "medaug/classifier.hpp"
#include "medaug/corpus.hpp"
#include "medaug/distiller.hpp"
#include "medaug/synth_bench.hpp"

namespace medaug {

struct IniEntry {
    std::string value;
    std::size_t line = 0;
    mutable bool used = false;
};

class IniFile {
  public:
    static IniFile parse(const std::string& text);
    static IniFile load(const std::string& path);

    const IniEntry* find(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::string require_string(const std::string& section, const std::string& key) const;
    std::size_t get_size(const std::string& section, const std::string& key,
                         std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                             const std::vector<std::string>& fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& section, const std::string& key,
                                           const std::vector<std::size_t>& fallback) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& section, const std::string& key,
                                            const std::vector<std::uint64_t>& fallback) const;

    // Section header line, or 0 when the section is absent.
    std::size_t section_line(const std::string& section) const;

    // Rejects keys nothing consumed (typo guard); anchored at their line.
    void reject_unused() const;

  private:
    std::map<std::string, std::map<std::string, IniEntry>> sections_;
    std::map<std::string, std::size_t> section_lines_;
};

enum class ExperimentMode { compare_strategies, synth_count, finetune_modes, model_size };

const char* to_string(ExperimentMode mode);
ExperimentMode experiment_mode_from_string(const std::string& s);

struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::compare_strategies;
    std::vector<std::uint64_t> seeds;
    std::string output_dir;

    SynthBenchSpec benchmark;  // its seed field is re-derived per run seed
    SplitRatios ratios;

    GeneratorTrainSetup gen;
    std::vector<std::size_t> d_model_sweep;  // model_size mode only

    ClassifierConfig clf;
    ClfTrainConfig clf_train_cfg;

    std::vector<std::size_t> synth_counts;
    AugmentationPlan plan;         // count and seed are filled per cell
    double synthetic_noise = 0.0;  // fraction of synthetic positives corrupted

    std::vector<StrategyKind> strategies;
    double keep_fraction = 0.5;
    std::vector<double> taus;
    KlScope kl_scope = KlScope::all_samples;
    KlDirection kl_direction = KlDirection::teacher_student;

    std::string config_text;  // verbatim source, fingerprinted into reports
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace medaug
