// Synthetic-data generation and the integration strategies: keep everything
// (base), confidence filtering, or handoff to consistency-controlled
// training (medaug).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medaug/classifier.hpp"
#include "medaug/corpus.hpp"
#include "medaug/genlm.hpp"

namespace medaug {

enum class PromptMode { with_context, without_context };
enum class StrategyKind { none, base, confidence_filter, medaug };
enum class KlScope { all_samples, synthetic_only };

const char* to_string(PromptMode mode);
const char* to_string(StrategyKind kind);
const char* to_string(KlScope scope);
PromptMode prompt_mode_from_string(const std::string& s);
StrategyKind strategy_kind_from_string(const std::string& s);
KlScope kl_scope_from_string(const std::string& s);

struct AugmentationPlan {
    std::size_t count = 0;
    int label = 1;  // positive-only generation
    PromptMode prompt_mode = PromptMode::with_context;
    bool dedup = true;
    double temperature = 1.0;
    std::size_t top_k = 40;
    std::size_t max_len = 64;
    std::uint64_t seed = 1;
};

void validate_plan(const AugmentationPlan& plan);

struct StrategyChoice {
    StrategyKind kind = StrategyKind::base;
    double keep_fraction = 0.5;  // confidence_filter only
    double tau = 1.0;            // medaug only
    KlScope kl_scope = KlScope::all_samples;
};

// Draws label-1 samples from the tuned generator until the plan count is
// reached, dropping empty generations and, with dedup, repeated texts.
// With-context prompts start from the first two tokens of a randomly chosen
// positive training document. Gives up with GenerationStarvation after 10x
// the target count of attempts.
std::vector<LabeledDocument> generate_synthetic(const GeneratorModel& g_tuned,
                                                const AugmentationPlan& plan,
                                                const std::vector<LabeledDocument>& train_docs);

// train ∪ synthetic, unfiltered. Ids must be disjoint.
std::vector<LabeledDocument> strategy_base(const std::vector<LabeledDocument>& train,
                                           const std::vector<LabeledDocument>& synthetic);

// Trains a fresh classifier on train only, scores every synthetic doc by
// the predicted probability of its own label, and keeps the top
// ceil(keep_fraction * n) (ties broken by id). Returns train ∪ kept.
std::vector<LabeledDocument> strategy_confidence_filter(
    const std::vector<LabeledDocument>& train, const std::vector<LabeledDocument>& synthetic,
    double keep_fraction, std::uint64_t seed, const ClassifierConfig& clf_cfg = {},
    const ClfTrainConfig& train_cfg = {});

struct AugmentationOutcome {
    std::vector<LabeledDocument> combined;
    bool kl_flag = false;  // medaug: the trainer must apply consistency control
    std::size_t requested = 0;
    std::size_t realized = 0;  // generated
    std::size_t kept = 0;      // after strategy filtering
    std::string report_json;   // provenance: strategy, parameters, counts, seeds
};

AugmentationOutcome run_augmentation(const CorpusSplit& split, const GeneratorModel& g_tuned,
                                     const AugmentationPlan& plan,
                                     const StrategyChoice& strategy);

// Guards evaluation sets against synthetic leakage.
void assert_no_synthetic(const std::vector<LabeledDocument>& docs, const std::string& where);

}  // namespace medaug
