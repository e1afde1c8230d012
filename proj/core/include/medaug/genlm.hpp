// Decoder-only autoregressive mini language model over label-prefixed
// sequences, with temperature / top-k sampling from label+context prompts.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medaug/checkpoint.hpp"
#include "medaug/corpus.hpp"
#include "medaug/tensor.hpp"
#include "medaug/vocab.hpp"

namespace medaug {

struct GeneratorConfig {
    std::size_t d_model = 64;
    std::size_t n_heads = 2;
    std::size_t n_blocks = 2;
    std::size_t context_len = 128;
    std::size_t ffn_mult = 4;
    double init_scale = 0.02;
};

class GeneratorModel {
  public:
    GeneratorModel(Vocabulary vocab, GeneratorConfig config, std::uint64_t seed);

    const Vocabulary& vocab() const noexcept { return vocab_; }
    const GeneratorConfig& config() const noexcept { return config_; }

    std::vector<Tensor> parameters() const;

    // Next-token logits for every position of one sequence, shape [n x V].
    // Attention is strictly causal: row t depends only on ids[0..t].
    Tensor logits(Tape& tape, const std::vector<std::size_t>& ids) const;

    Checkpoint to_checkpoint() const;
    static GeneratorModel from_checkpoint(const Checkpoint& ckpt);

  private:
    struct Block {
        Tensor ln1_gain, ln1_bias;
        Tensor wq, bq, wk, bk, wv, bv, wo, bo;
        Tensor ln2_gain, ln2_bias;
        Tensor w1, b1, w2, b2;
    };

    GeneratorModel() = default;

    Vocabulary vocab_;
    GeneratorConfig config_;
    Tensor tok_emb_;  // [V x d], also the tied output projection
    Tensor pos_emb_;  // [context_len x d]
    std::vector<Block> blocks_;
    Tensor lnf_gain_, lnf_bias_;
};

struct LmTrainConfig {
    std::size_t epochs = 3;
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    std::uint64_t seed = 1;
};

// Minimizes mean next-token cross-entropy over all positions after the
// first. Returns per-epoch mean loss. Deterministic per seed.
std::vector<double> lm_train(GeneratorModel& model,
                             const std::vector<std::vector<std::size_t>>& sequences,
                             const LmTrainConfig& cfg);

// Optionally under-samples the majority class, encodes the documents, and
// runs lm_train. Returns the number of documents actually trained on.
std::size_t lm_finetune(GeneratorModel& model, const std::vector<LabeledDocument>& train_docs,
                        bool balanced, const LmTrainConfig& cfg);

// exp(mean next-token cross-entropy) over the documents.
double perplexity(const GeneratorModel& model, const std::vector<LabeledDocument>& docs);

struct PromptSpec {
    int label = 1;
    std::vector<std::string> context;  // may be empty
    double temperature = 1.0;
    std::size_t top_k = 40;
    std::size_t max_len = 64;  // cap on total sequence length incl. prefix
    std::uint64_t seed = 1;
};

// Samples from [LBL{label}, SEP, context...] until EOS or max_len. The
// returned text is the context plus generated tokens; label / SEP / EOS are
// never part of it, and PAD / LBL / SEP are masked out of every sampling
// step. Deterministic per seed.
LabeledDocument sample(const GeneratorModel& model, const PromptSpec& prompt);

}  // namespace medaug
