#include "medaug/genlm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "medaug/errors.hpp"
#include "medaug/optimizer.hpp"

namespace medaug {

namespace {

// Additive causal mask: exactly zero on and below the diagonal, a constant
// so large that exp underflows to exact zero above it.
constexpr double kMaskedOut = -1e30;

Tensor causal_mask(std::size_t n) {
    Tensor mask = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) mask.at(i, j) = kMaskedOut;
    return mask;
}

}  // namespace

GeneratorModel::GeneratorModel(Vocabulary vocab, GeneratorConfig config, std::uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
    if (config_.d_model == 0 || config_.n_heads == 0 || config_.n_blocks == 0 ||
        config_.ffn_mult == 0)
        throw ValidationError("generator dims must be positive");
    if (config_.d_model % config_.n_heads != 0)
        throw ValidationError("d_model must be divisible by n_heads");
    if (config_.context_len < 4) throw ValidationError("context_len must be at least 4");

    Rng rng(seed);
    const std::size_t v = vocab_.size(), d = config_.d_model;
    const std::size_t f = d * config_.ffn_mult;
    const double s = config_.init_scale;

    tok_emb_ = Tensor::randn({v, d}, rng, s);
    pos_emb_ = Tensor::randn({config_.context_len, d}, rng, s);
    blocks_.resize(config_.n_blocks);
    for (Block& blk : blocks_) {
        blk.ln1_gain = Tensor::full({d}, 1.0);
        blk.ln1_bias = Tensor::zeros({d});
        blk.wq = Tensor::randn({d, d}, rng, s);
        blk.bq = Tensor::zeros({d});
        blk.wk = Tensor::randn({d, d}, rng, s);
        blk.bk = Tensor::zeros({d});
        blk.wv = Tensor::randn({d, d}, rng, s);
        blk.bv = Tensor::zeros({d});
        blk.wo = Tensor::randn({d, d}, rng, s);
        blk.bo = Tensor::zeros({d});
        blk.ln2_gain = Tensor::full({d}, 1.0);
        blk.ln2_bias = Tensor::zeros({d});
        blk.w1 = Tensor::randn({d, f}, rng, s);
        blk.b1 = Tensor::zeros({f});
        blk.w2 = Tensor::randn({f, d}, rng, s);
        blk.b2 = Tensor::zeros({d});
    }
    lnf_gain_ = Tensor::full({d}, 1.0);
    lnf_bias_ = Tensor::zeros({d});
}

std::vector<Tensor> GeneratorModel::parameters() const {
    std::vector<Tensor> params{tok_emb_, pos_emb_};
    for (const Block& blk : blocks_) {
        for (const Tensor& t :
             {blk.ln1_gain, blk.ln1_bias, blk.wq, blk.bq, blk.wk, blk.bk, blk.wv, blk.bv,
              blk.wo, blk.bo, blk.ln2_gain, blk.ln2_bias, blk.w1, blk.b1, blk.w2, blk.b2})
            params.push_back(t);
    }
    params.push_back(lnf_gain_);
    params.push_back(lnf_bias_);
    return params;
}

Tensor GeneratorModel::logits(Tape& tape, const std::vector<std::size_t>& ids) const {
    const std::size_t n = ids.size();
    if (n == 0) throw ValidationError("empty sequence");
    if (n > config_.context_len)
        throw ValidationError("sequence of " + std::to_string(n) +
                              " tokens exceeds context length " +
                              std::to_string(config_.context_len));

    const std::size_t d = config_.d_model;
    const std::size_t hs = d / config_.n_heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hs));
    Tensor mask = causal_mask(n);

    Tensor x = tape.add(tape.embed(tok_emb_, ids), tape.slice_rows(pos_emb_, 0, n));
    for (const Block& blk : blocks_) {
        Tensor h = tape.layer_norm(x, blk.ln1_gain, blk.ln1_bias);
        Tensor q = tape.add_row_vector(tape.matmul(h, blk.wq), blk.bq);
        Tensor k = tape.add_row_vector(tape.matmul(h, blk.wk), blk.bk);
        Tensor v = tape.add_row_vector(tape.matmul(h, blk.wv), blk.bv);

        std::vector<Tensor> heads;
        heads.reserve(config_.n_heads);
        for (std::size_t head = 0; head < config_.n_heads; ++head) {
            Tensor qh = tape.slice_cols(q, head * hs, hs);
            Tensor kh = tape.slice_cols(k, head * hs, hs);
            Tensor vh = tape.slice_cols(v, head * hs, hs);
            Tensor scores = tape.add(tape.scale(tape.matmul_nt(qh, kh), att_scale), mask);
            heads.push_back(tape.matmul(tape.softmax_rows(scores), vh));
        }
        Tensor att = heads.size() == 1 ? heads.front() : tape.concat_cols(heads);
        x = tape.add(x, tape.add_row_vector(tape.matmul(att, blk.wo), blk.bo));

        Tensor h2 = tape.layer_norm(x, blk.ln2_gain, blk.ln2_bias);
        Tensor ff = tape.gelu(tape.add_row_vector(tape.matmul(h2, blk.w1), blk.b1));
        x = tape.add(x, tape.add_row_vector(tape.matmul(ff, blk.w2), blk.b2));
    }
    Tensor xf = tape.layer_norm(x, lnf_gain_, lnf_bias_);
    return tape.matmul_nt(xf, tok_emb_);  // tied output projection
}

Checkpoint GeneratorModel::to_checkpoint() const {
    Checkpoint ckpt;
    ckpt.kind = CheckpointKind::generator;
    ckpt.vocab_tokens = vocab_.tokens();
    ckpt.add_hyper("vocab_min_freq", static_cast<double>(vocab_.min_freq()));
    ckpt.add_hyper("d_model", static_cast<double>(config_.d_model));
    ckpt.add_hyper("n_heads", static_cast<double>(config_.n_heads));
    ckpt.add_hyper("n_blocks", static_cast<double>(config_.n_blocks));
    ckpt.add_hyper("context_len", static_cast<double>(config_.context_len));
    ckpt.add_hyper("ffn_mult", static_cast<double>(config_.ffn_mult));
    ckpt.add_hyper("init_scale", config_.init_scale);
    ckpt.add_tensor("tok_emb", tok_emb_);
    ckpt.add_tensor("pos_emb", pos_emb_);
    static const char* kBlockFields[] = {"ln1_gain", "ln1_bias", "wq", "bq", "wk", "bk",
                                         "wv",       "bv",       "wo", "bo", "ln2_gain",
                                         "ln2_bias", "w1",       "b1", "w2", "b2"};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& blk = blocks_[i];
        const Tensor fields[] = {blk.ln1_gain, blk.ln1_bias, blk.wq, blk.bq, blk.wk, blk.bk,
                                 blk.wv,       blk.bv,       blk.wo, blk.bo, blk.ln2_gain,
                                 blk.ln2_bias, blk.w1,       blk.b1, blk.w2, blk.b2};
        std::string prefix = "blk" + std::to_string(i) + ".";
        for (std::size_t j = 0; j < 16; ++j) ckpt.add_tensor(prefix + kBlockFields[j], fields[j]);
    }
    ckpt.add_tensor("lnf_gain", lnf_gain_);
    ckpt.add_tensor("lnf_bias", lnf_bias_);
    return ckpt;
}

GeneratorModel GeneratorModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != CheckpointKind::generator)
        throw ValidationError("checkpoint does not hold a generator");
    GeneratorModel model;
    model.vocab_ = Vocabulary::from_tokens(
        ckpt.vocab_tokens, static_cast<std::size_t>(ckpt.hyper("vocab_min_freq")));
    model.config_.d_model = static_cast<std::size_t>(ckpt.hyper("d_model"));
    model.config_.n_heads = static_cast<std::size_t>(ckpt.hyper("n_heads"));
    model.config_.n_blocks = static_cast<std::size_t>(ckpt.hyper("n_blocks"));
    model.config_.context_len = static_cast<std::size_t>(ckpt.hyper("context_len"));
    model.config_.ffn_mult = static_cast<std::size_t>(ckpt.hyper("ffn_mult"));
    model.config_.init_scale = ckpt.hyper("init_scale");

    const std::size_t v = model.vocab_.size(), d = model.config_.d_model;
    model.tok_emb_ = ckpt.tensor("tok_emb");
    model.pos_emb_ = ckpt.tensor("pos_emb");
    if (model.tok_emb_.shape() != std::vector<std::size_t>{v, d} ||
        model.pos_emb_.shape() != std::vector<std::size_t>{model.config_.context_len, d})
        throw ValidationError("generator checkpoint shapes are inconsistent");

    model.blocks_.resize(model.config_.n_blocks);
    for (std::size_t i = 0; i < model.blocks_.size(); ++i) {
        Block& blk = model.blocks_[i];
        std::string p = "blk" + std::to_string(i) + ".";
        blk.ln1_gain = ckpt.tensor(p + "ln1_gain");
        blk.ln1_bias = ckpt.tensor(p + "ln1_bias");
        blk.wq = ckpt.tensor(p + "wq");
        blk.bq = ckpt.tensor(p + "bq");
        blk.wk = ckpt.tensor(p + "wk");
        blk.bk = ckpt.tensor(p + "bk");
        blk.wv = ckpt.tensor(p + "wv");
        blk.bv = ckpt.tensor(p + "bv");
        blk.wo = ckpt.tensor(p + "wo");
        blk.bo = ckpt.tensor(p + "bo");
        blk.ln2_gain = ckpt.tensor(p + "ln2_gain");
        blk.ln2_bias = ckpt.tensor(p + "ln2_bias");
        blk.w1 = ckpt.tensor(p + "w1");
        blk.b1 = ckpt.tensor(p + "b1");
        blk.w2 = ckpt.tensor(p + "w2");
        blk.b2 = ckpt.tensor(p + "b2");
    }
    model.lnf_gain_ = ckpt.tensor("lnf_gain");
    model.lnf_bias_ = ckpt.tensor("lnf_bias");
    return model;
}

std::vector<double> lm_train(GeneratorModel& model,
                             const std::vector<std::vector<std::size_t>>& sequences,
                             const LmTrainConfig& cfg) {
    if (sequences.empty()) throw ValidationError("lm_train: no sequences");
    if (cfg.epochs == 0 || cfg.batch_size == 0)
        throw ValidationError("lm_train: epochs and batch_size must be positive");
    for (const auto& seq : sequences) {
        if (seq.size() < 2) throw ValidationError("lm_train: sequence has no target position");
        if (seq.size() > model.config().context_len)
            throw ValidationError("lm_train: sequence exceeds context length");
    }

    Adam optimizer(model.parameters(), {.learning_rate = cfg.learning_rate});
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_positions = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            std::size_t end = std::min(order.size(), begin + cfg.batch_size);

            Tape tape;
            std::vector<Tensor> rows;
            std::vector<std::size_t> targets;
            std::size_t positions = 0;
            for (std::size_t b = begin; b < end; ++b) {
                const auto& seq = sequences[order[b]];
                std::vector<std::size_t> inputs(seq.begin(), seq.end() - 1);
                rows.push_back(model.logits(tape, inputs));
                targets.insert(targets.end(), seq.begin() + 1, seq.end());
                positions += inputs.size();
            }
            Tensor logits = rows.size() == 1 ? rows.front() : tape.concat_rows(rows);
            Tensor loss = tape.cross_entropy(logits, targets);

            optimizer.zero_grad();
            tape.backward(loss);
            optimizer.step();

            epoch_loss += loss.item() * static_cast<double>(positions);
            epoch_positions += positions;
        }
        history.push_back(epoch_loss / static_cast<double>(epoch_positions));
    }
    return history;
}

std::size_t lm_finetune(GeneratorModel& model, const std::vector<LabeledDocument>& train_docs,
                        bool balanced, const LmTrainConfig& cfg) {
    if (train_docs.empty()) throw ValidationError("lm_finetune: no documents");
    std::vector<LabeledDocument> docs =
        balanced ? undersample_balanced(train_docs, derive_seed(cfg.seed, "undersample"))
                 : train_docs;
    std::vector<std::vector<std::size_t>> sequences;
    sequences.reserve(docs.size());
    for (const LabeledDocument& doc : docs)
        sequences.push_back(encode_labeled(doc, model.vocab(), model.config().context_len));
    lm_train(model, sequences, cfg);
    return docs.size();
}

double perplexity(const GeneratorModel& model, const std::vector<LabeledDocument>& docs) {
    if (docs.empty()) throw ValidationError("perplexity: no documents");
    double total = 0.0;
    std::size_t positions = 0;
    for (const LabeledDocument& doc : docs) {
        std::vector<std::size_t> seq =
            encode_labeled(doc, model.vocab(), model.config().context_len);
        std::vector<std::size_t> inputs(seq.begin(), seq.end() - 1);
        std::vector<std::size_t> targets(seq.begin() + 1, seq.end());
        Tape tape(false);
        Tensor loss = tape.cross_entropy(model.logits(tape, inputs), targets);
        total += loss.item() * static_cast<double>(inputs.size());
        positions += inputs.size();
    }
    return std::exp(total / static_cast<double>(positions));
}

LabeledDocument sample(const GeneratorModel& model, const PromptSpec& prompt) {
    if (prompt.label != 0 && prompt.label != 1)
        throw ValidationError("prompt label must be 0 or 1");
    if (!(prompt.temperature > 0.0)) throw ValidationError("temperature must be positive");
    if (prompt.top_k == 0) throw ValidationError("top_k must be at least 1");
    if (prompt.max_len > model.config().context_len)
        throw ValidationError("max_len exceeds context length");

    const Vocabulary& vocab = model.vocab();
    std::vector<std::size_t> ids{Vocabulary::label_id(prompt.label), kSepId};
    for (const std::string& tok : prompt.context) ids.push_back(vocab.token_to_id(tok));
    const std::size_t prefix_len = ids.size();
    if (prefix_len >= prompt.max_len)
        throw ValidationError("prompt leaves no room to generate");

    Rng rng(prompt.seed);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    while (ids.size() < prompt.max_len) {
        Tape tape(false);
        Tensor all = model.logits(tape, ids);
        const std::size_t v = all.cols();
        std::vector<double> row(v);
        for (std::size_t j = 0; j < v; ++j)
            row[j] = all.at(ids.size() - 1, j) / prompt.temperature;
        row[kPadId] = neg_inf;
        row[kSepId] = neg_inf;
        row[kLbl0Id] = neg_inf;
        row[kLbl1Id] = neg_inf;

        // Top-k cutoff: candidates ranked by logit desc, id asc.
        std::vector<std::size_t> cand;
        cand.reserve(v);
        for (std::size_t j = 0; j < v; ++j)
            if (row[j] != neg_inf) cand.push_back(j);
        std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            if (row[a] != row[b]) return row[a] > row[b];
            return a < b;
        });
        if (cand.size() > prompt.top_k) cand.resize(prompt.top_k);
        std::sort(cand.begin(), cand.end());  // cumulative walk in id order

        double mx = row[cand.front()];
        for (std::size_t j : cand) mx = std::max(mx, row[j]);
        double sum = 0.0;
        std::vector<double> probs(cand.size());
        for (std::size_t c = 0; c < cand.size(); ++c) {
            probs[c] = std::exp(row[cand[c]] - mx);
            sum += probs[c];
        }

        const double u = rng.uniform() * sum;
        double cum = 0.0;
        std::size_t chosen = cand.back();
        for (std::size_t c = 0; c < cand.size(); ++c) {
            cum += probs[c];
            if (u < cum) {
                chosen = cand[c];
                break;
            }
        }
        if (chosen == kEosId) break;
        ids.push_back(chosen);
    }

    std::vector<std::size_t> body(ids.begin() + static_cast<std::ptrdiff_t>(2), ids.end());
    LabeledDocument doc;
    doc.id = "sample-" + std::to_string(prompt.seed);
    doc.label = prompt.label;
    doc.text = vocab.decode(body);
    doc.origin = DocOrigin::synthetic;
    return doc;
}

}  // namespace medaug
