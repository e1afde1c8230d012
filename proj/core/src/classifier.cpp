#include "medaug/classifier.hpp"

#include <algorithm>
#include <numeric>

#include "medaug/errors.hpp"
#include "medaug/optimizer.hpp"

namespace medaug {

namespace {

std::vector<std::size_t> content_ids(const Vocabulary& vocab, const LabeledDocument& doc) {
    validate_document(doc);
    return vocab.encode_text(doc.text);
}

}  // namespace

ClassifierModel::ClassifierModel(Vocabulary vocab, ClassifierConfig config, std::uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
    if (config_.embed_dim == 0 || config_.hidden_dim == 0)
        throw ValidationError("classifier dims must be positive");
    Rng rng(seed);
    const std::size_t v = vocab_.size(), d = config_.embed_dim, h = config_.hidden_dim;
    emb_ = Tensor::randn({v, d}, rng, config_.init_scale);
    w1_ = Tensor::randn({d, h}, rng, config_.init_scale);
    b1_ = Tensor::zeros({h});
    w2_ = Tensor::randn({h, 2}, rng, config_.init_scale);
    b2_ = Tensor::zeros({2});
}

std::vector<Tensor> ClassifierModel::parameters() const { return {emb_, w1_, b1_, w2_, b2_}; }

Tensor ClassifierModel::logits(Tape& tape, const LabeledDocument& doc) const {
    std::vector<std::size_t> ids = content_ids(vocab_, doc);
    Tensor pooled = tape.bow_pool(emb_, ids);
    Tensor hidden = tape.gelu(tape.add_row_vector(tape.matmul(pooled, w1_), b1_));
    return tape.add_row_vector(tape.matmul(hidden, w2_), b2_);
}

std::array<double, 2> ClassifierModel::predict_proba(const LabeledDocument& doc) const {
    Tape tape(false);
    Tensor probs = tape.softmax_rows(logits(tape, doc));
    return {probs.at(0), probs.at(1)};
}

Checkpoint ClassifierModel::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.kind = CheckpointKind::classifier;
    ckpt.vocab_tokens = vocab_.tokens();
    ckpt.add_hyper("vocab_min_freq", static_cast<double>(vocab_.min_freq()));
    ckpt.add_hyper("embed_dim", static_cast<double>(config_.embed_dim));
    ckpt.add_hyper("hidden_dim", static_cast<double>(config_.hidden_dim));
    ckpt.add_hyper("init_scale", config_.init_scale);
    ckpt.add_tensor("emb", emb_);
    ckpt.add_tensor("w1", w1_);
    ckpt.add_tensor("b1", b1_);
    ckpt.add_tensor("w2", w2_);
    ckpt.add_tensor("b2", b2_);
    return ckpt;
}

ClassifierModel ClassifierModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != CheckpointKind::classifier)
        throw ValidationError("checkpoint does not hold a classifier");
    ClassifierModel model;
    model.vocab_ = Vocabulary::from_tokens(
        ckpt.vocab_tokens, static_cast<std::size_t>(ckpt.hyper("vocab_min_freq")));
    model.config_.embed_dim = static_cast<std::size_t>(ckpt.hyper("embed_dim"));
    model.config_.hidden_dim = static_cast<std::size_t>(ckpt.hyper("hidden_dim"));
    model.config_.init_scale = ckpt.hyper("init_scale");
    model.emb_ = ckpt.tensor("emb");
    model.w1_ = ckpt.tensor("w1");
    model.b1_ = ckpt.tensor("b1");
    model.w2_ = ckpt.tensor("w2");
    model.b2_ = ckpt.tensor("b2");
    const std::size_t v = model.vocab_.size(), d = model.config_.embed_dim,
                      h = model.config_.hidden_dim;
    if (model.emb_.shape() != std::vector<std::size_t>{v, d} ||
        model.w1_.shape() != std::vector<std::size_t>{d, h} || model.b1_.size() != h ||
        model.w2_.shape() != std::vector<std::size_t>{h, 2} || model.b2_.size() != 2)
        throw ValidationError("classifier checkpoint shapes are inconsistent");
    return model;
}

std::vector<double> clf_train(ClassifierModel& model, const std::vector<LabeledDocument>& docs,
                              const ClfTrainConfig& cfg,
                              const std::vector<double>* sample_weights,
                              const BatchLossHook* hook) {
    if (docs.empty()) throw ValidationError("clf_train: no documents");
    if (cfg.epochs == 0 || cfg.batch_size == 0)
        throw ValidationError("clf_train: epochs and batch_size must be positive");
    if (sample_weights && sample_weights->size() != docs.size())
        throw DimensionError("clf_train: weight count does not match document count");
    std::size_t n_pos = count_label(docs, 1);
    if (n_pos == 0 || n_pos == docs.size())
        throw ValidationError("clf_train: both classes required");

    Adam optimizer(model.parameters(), {.learning_rate = cfg.learning_rate});
    Rng rng(cfg.seed);

    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_docs = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));

            Tape tape;
            std::vector<Tensor> rows;
            std::vector<std::size_t> targets;
            std::vector<double> weights;
            rows.reserve(batch.size());
            for (std::size_t idx : batch) {
                rows.push_back(model.logits(tape, docs[idx]));
                targets.push_back(static_cast<std::size_t>(docs[idx].label));
                if (sample_weights) weights.push_back((*sample_weights)[idx]);
            }
            Tensor logits = rows.size() == 1 ? rows.front() : tape.concat_rows(rows);
            Tensor loss = sample_weights ? tape.cross_entropy(logits, targets, weights)
                                         : tape.cross_entropy(logits, targets);
            if (hook) loss = (*hook)(tape, loss, logits, batch);

            optimizer.zero_grad();
            tape.backward(loss);
            optimizer.step();

            epoch_loss += loss.item() * static_cast<double>(batch.size());
            epoch_docs += batch.size();
        }
        history.push_back(epoch_loss / static_cast<double>(epoch_docs));
    }
    return history;
}

ScoredPredictions score_corpus(const ClassifierModel& model,
                               const std::vector<LabeledDocument>& docs) {
    ScoredPredictions preds;
    preds.scores.reserve(docs.size());
    preds.labels.reserve(docs.size());
    for (const LabeledDocument& doc : docs) {
        preds.scores.push_back(model.predict_proba(doc)[1]);
        preds.labels.push_back(doc.label);
    }
    return preds;
}

}  // namespace medaug
