// Probabilistic binary text classifier: mean-pooled token embeddings into a
// 2-layer feed-forward net with two output logits. Serves as teacher,
// student, and confidence-filter scorer.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "medaug/checkpoint.hpp"
#include "medaug/corpus.hpp"
#include "medaug/metrics.hpp"
#include "medaug/tensor.hpp"
#include "medaug/vocab.hpp"

namespace medaug {

struct ClassifierConfig {
    std::size_t embed_dim = 32;
    std::size_t hidden_dim = 64;
    double init_scale = 0.02;  // 0 gives an all-zero (maximally uncertain) model
};

class ClassifierModel {
  public:
    ClassifierModel(Vocabulary vocab, ClassifierConfig config, std::uint64_t seed);

    const Vocabulary& vocab() const noexcept { return vocab_; }
    const ClassifierConfig& config() const noexcept { return config_; }

    // Stable order, suitable for the optimizer and for checkpoints.
    std::vector<Tensor> parameters() const;

    // Two logits for one document, shape [1 x 2]. Token order does not
    // matter: pooling is a count-weighted mean over the embedding table.
    Tensor logits(Tape& tape, const LabeledDocument& doc) const;

    std::array<double, 2> predict_proba(const LabeledDocument& doc) const;

    Checkpoint to_checkpoint() const;
    static ClassifierModel from_checkpoint(const Checkpoint& ckpt);

  private:
    ClassifierModel() = default;

    Vocabulary vocab_;
    ClassifierConfig config_;
    Tensor emb_;  // [V x embed_dim]
    Tensor w1_, b1_, w2_, b2_;
};

struct ClfTrainConfig {
    std::size_t epochs = 8;
    double learning_rate = 5e-3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
};

// Optional extension point for a consistency term: receives the batch
// cross-entropy, the batch logits (row j belongs to doc batch_indices[j]),
// and the doc indices; returns the loss to optimize. Callers wanting plain
// training must pass no hook at all, not a hook that adds zero.
using BatchLossHook = std::function<Tensor(Tape& tape, const Tensor& batch_ce,
                                           const Tensor& batch_logits,
                                           const std::vector<std::size_t>& batch_indices)>;

// Minimizes weighted mean cross-entropy with Adam; weights default to 1.
// Returns per-epoch mean loss (weighted by batch size). Deterministic per
// seed.
std::vector<double> clf_train(ClassifierModel& model, const std::vector<LabeledDocument>& docs,
                              const ClfTrainConfig& cfg,
                              const std::vector<double>* sample_weights = nullptr,
                              const BatchLossHook* hook = nullptr);

// p1 scores paired with true labels, in input order.
ScoredPredictions score_corpus(const ClassifierModel& model,
                               const std::vector<LabeledDocument>& docs);

}  // namespace medaug
