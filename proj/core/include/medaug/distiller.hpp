// Teacher-student noise control: pre-train a teacher on original data, then
// train the student on the combined corpus under the joint objective
// L = L_student + tau * L_KL against the frozen teacher's distribution.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "medaug/augmentor.hpp"
#include "medaug/classifier.hpp"
#include "medaug/corpus.hpp"
#include "medaug/genlm.hpp"

namespace medaug {

enum class KlDirection { teacher_student, student_teacher };

const char* to_string(KlDirection dir);
KlDirection kl_direction_from_string(const std::string& s);

struct DistillConfig {
    double tau = 1.0;
    KlScope kl_scope = KlScope::all_samples;
    KlDirection kl_direction = KlDirection::teacher_student;
    ClassifierConfig clf;          // architecture shared by teacher and student
    ClfTrainConfig teacher_train;  // seed fields are overridden from `seed`
    ClfTrainConfig student_train;
    std::uint64_t seed = 1;
};

struct DistillLossBreakdown {
    double student = 0.0;  // batch mean cross-entropy
    double kl = 0.0;       // batch mean KL over in-scope samples
    double total = 0.0;    // student + tau * kl, exact
};

// Fresh classifier trained on original data only; rejects synthetic input.
ClassifierModel pretrain_teacher(const Vocabulary& vocab,
                                 const std::vector<LabeledDocument>& d_train,
                                 const DistillConfig& cfg);

struct StudentResult {
    ClassifierModel model;
    std::vector<double> epoch_loss;  // total loss per epoch
    std::vector<DistillLossBreakdown> batch_breakdown;  // empty when tau = 0
};

// Trains the student on d_combined. With tau > 0 each batch loss adds
// tau * KL(teacher ‖ student) (direction configurable) over in-scope
// samples, the teacher's distribution entering as a constant. With tau = 0
// the KL term is never evaluated, so the run is bitwise identical to plain
// clf_train; the teacher may then be null.
StudentResult train_student(const Vocabulary& vocab,
                            const std::vector<LabeledDocument>& d_combined,
                            const ClassifierModel* teacher, const DistillConfig& cfg);

// Fingerprints for run reports; identical reruns produce identical values.
std::string model_fingerprint(const std::vector<Tensor>& params);
std::string docs_fingerprint(const std::vector<LabeledDocument>& docs);

struct GeneratorTrainSetup {
    GeneratorConfig generator;
    LmTrainConfig finetune;
    bool balanced = true;
    std::size_t vocab_min_freq = 1;
};

struct PipelineResult {
    ClassifierModel student;
    nlohmann::json report;  // per-stage seeds, artifact hashes, metrics
};

// The four stages in order: fine-tune the generator, generate synthetic
// positives, pre-train the teacher, train the student; then evaluate.
// Sub-seeds are derived from master_seed; errors carry the stage name.
PipelineResult medaug_pipeline(const CorpusSplit& split, const GeneratorTrainSetup& gen_setup,
                               AugmentationPlan plan, DistillConfig distill,
                               std::uint64_t master_seed);

}  // namespace medaug
