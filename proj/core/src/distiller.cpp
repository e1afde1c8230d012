#include "medaug/distiller.hpp"

#include <chrono>
#include <utility>

#include "medaug/errors.hpp"
#include "medaug/hashing.hpp"
#include "medaug/metrics.hpp"

namespace medaug {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const char* to_string(KlDirection dir) {
    return dir == KlDirection::teacher_student ? "teacher_student" : "student_teacher";
}

KlDirection kl_direction_from_string(const std::string& s) {
    if (s == "teacher_student") return KlDirection::teacher_student;
    if (s == "student_teacher") return KlDirection::student_teacher;
    throw ValidationError("unknown kl direction: " + s);
}

ClassifierModel pretrain_teacher(const Vocabulary& vocab,
                                 const std::vector<LabeledDocument>& d_train,
                                 const DistillConfig& cfg) {
    assert_no_synthetic(d_train, "the teacher training set");
    ClassifierModel teacher(vocab, cfg.clf, derive_seed(cfg.seed, "teacher-init"));
    ClfTrainConfig train_cfg = cfg.teacher_train;
    train_cfg.seed = derive_seed(cfg.seed, "teacher-train");
    clf_train(teacher, d_train, train_cfg);
    return teacher;
}

StudentResult train_student(const Vocabulary& vocab,
                            const std::vector<LabeledDocument>& d_combined,
                            const ClassifierModel* teacher, const DistillConfig& cfg) {
    if (cfg.tau < 0.0) throw ValidationError("tau must be nonnegative");

    ClassifierModel student(vocab, cfg.clf, derive_seed(cfg.seed, "student-init"));
    ClfTrainConfig train_cfg = cfg.student_train;
    train_cfg.seed = derive_seed(cfg.seed, "student-train");

    StudentResult result{std::move(student), {}, {}};
    if (cfg.tau == 0.0) {
        result.epoch_loss = clf_train(result.model, d_combined, train_cfg);
        return result;
    }

    if (!teacher) throw ValidationError("tau > 0 requires a teacher");

    // The teacher is frozen: its distribution per doc is a constant.
    std::vector<std::array<double, 2>> teacher_probs;
    teacher_probs.reserve(d_combined.size());
    std::vector<char> in_scope;
    in_scope.reserve(d_combined.size());
    for (const LabeledDocument& doc : d_combined) {
        teacher_probs.push_back(teacher->predict_proba(doc));
        in_scope.push_back(cfg.kl_scope == KlScope::all_samples ||
                           doc.origin == DocOrigin::synthetic);
    }

    BatchLossHook hook = [&](Tape& tape, const Tensor& batch_ce, const Tensor& batch_logits,
                             const std::vector<std::size_t>& batch) -> Tensor {
        std::vector<std::size_t> scoped_rows;
        for (std::size_t j = 0; j < batch.size(); ++j)
            if (in_scope[batch[j]]) scoped_rows.push_back(j);
        if (scoped_rows.empty()) {
            result.batch_breakdown.push_back({batch_ce.item(), 0.0, batch_ce.item()});
            return batch_ce;
        }

        std::vector<Tensor> rows;
        std::vector<double> ref;
        rows.reserve(scoped_rows.size());
        ref.reserve(2 * scoped_rows.size());
        for (std::size_t j : scoped_rows) {
            rows.push_back(tape.slice_rows(batch_logits, j, 1));
            ref.push_back(teacher_probs[batch[j]][0]);
            ref.push_back(teacher_probs[batch[j]][1]);
        }
        Tensor scoped = rows.size() == 1 ? rows.front() : tape.concat_rows(rows);
        Tensor q_student = tape.softmax_rows(scoped);
        Tensor p_teacher = Tensor::matrix(scoped_rows.size(), 2, std::move(ref));

        Tensor kl = cfg.kl_direction == KlDirection::teacher_student
                        ? tape.kl_divergence(p_teacher, q_student)
                        : tape.kl_divergence(q_student, p_teacher);
        Tensor total = tape.add(batch_ce, tape.scale(kl, cfg.tau));
        result.batch_breakdown.push_back({batch_ce.item(), kl.item(), total.item()});
        return total;
    };

    result.epoch_loss = clf_train(result.model, d_combined, train_cfg, nullptr, &hook);
    return result;
}

std::string model_fingerprint(const std::vector<Tensor>& params) {
    Fnv1a h;
    for (const Tensor& t : params) {
        for (std::size_t d : t.shape()) h.update(static_cast<std::uint64_t>(d));
        h.update(t.value());
    }
    return h.hex();
}

std::string docs_fingerprint(const std::vector<LabeledDocument>& docs) {
    Fnv1a h;
    h.update(static_cast<std::uint64_t>(docs.size()));
    for (const LabeledDocument& doc : docs) {
        h.update(doc.id);
        h.update(static_cast<std::uint64_t>(doc.label));
        h.update(doc.text);
        h.update(std::string_view(to_string(doc.origin)));
    }
    return h.hex();
}

PipelineResult medaug_pipeline(const CorpusSplit& split, const GeneratorTrainSetup& gen_setup,
                               AugmentationPlan plan, DistillConfig distill,
                               std::uint64_t master_seed) {
    nlohmann::json report;
    report["master_seed"] = master_seed;
    report["corpus"] = {{"train", docs_fingerprint(split.train)},
                        {"valid", docs_fingerprint(split.valid)},
                        {"test", docs_fingerprint(split.test)}};
    nlohmann::json stages = nlohmann::json::array();

    auto run_stage = [&stages](const std::string& name, std::uint64_t seed, auto&& body) {
        auto start = std::chrono::steady_clock::now();
        nlohmann::json entry;
        entry["stage"] = name;
        entry["seed"] = seed;
        try {
            body(entry);
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        entry["seconds"] = seconds_since(start);
        stages.push_back(std::move(entry));
    };

    Vocabulary vocab = Vocabulary::build(split.train, gen_setup.vocab_min_freq);

    GeneratorModel generator(vocab, gen_setup.generator, derive_seed(master_seed, "generator-init"));
    run_stage("finetune-generator", derive_seed(master_seed, "generator-train"),
              [&](nlohmann::json& entry) {
                  LmTrainConfig ft = gen_setup.finetune;
                  ft.seed = derive_seed(master_seed, "generator-train");
                  std::size_t used = lm_finetune(generator, split.train, gen_setup.balanced, ft);
                  entry["finetune_docs"] = used;
                  entry["hash"] = model_fingerprint(generator.parameters());
              });

    std::vector<LabeledDocument> synthetic;
    plan.seed = derive_seed(master_seed, "generate");
    run_stage("generate-synthetic", plan.seed, [&](nlohmann::json& entry) {
        synthetic = generate_synthetic(generator, plan, split.train);
        entry["requested"] = plan.count;
        entry["realized"] = synthetic.size();
        entry["hash"] = docs_fingerprint(synthetic);
    });

    distill.seed = master_seed;
    ClassifierModel teacher(vocab, distill.clf, 0);
    run_stage("pretrain-teacher", derive_seed(master_seed, "teacher-train"),
              [&](nlohmann::json& entry) {
                  teacher = pretrain_teacher(vocab, split.train, distill);
                  entry["hash"] = model_fingerprint(teacher.parameters());
              });

    StudentResult student{ClassifierModel(vocab, distill.clf, 0), {}, {}};
    run_stage("train-student", derive_seed(master_seed, "student-train"),
              [&](nlohmann::json& entry) {
                  std::vector<LabeledDocument> combined = strategy_base(split.train, synthetic);
                  entry["combined_docs"] = combined.size();
                  student = train_student(vocab, combined, &teacher, distill);
                  entry["final_loss"] = student.epoch_loss.back();
                  entry["hash"] = model_fingerprint(student.model.parameters());
              });

    run_stage("evaluate", master_seed, [&](nlohmann::json& entry) {
        assert_no_synthetic(split.valid, "the validation set");
        assert_no_synthetic(split.test, "the test set");
        MetricsSummary valid = evaluate_all(score_corpus(student.model, split.valid));
        MetricsSummary test = evaluate_all(score_corpus(student.model, split.test));
        entry["valid"] = {{"auroc", valid.auroc}, {"auprc", valid.auprc}, {"rp80", valid.rp80}};
        entry["test"] = {{"auroc", test.auroc}, {"auprc", test.auprc}, {"rp80", test.rp80}};
    });

    report["stages"] = std::move(stages);
    return {std::move(student.model), std::move(report)};
}

}  // namespace medaug
