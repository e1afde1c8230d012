#include "medaug/vocab.hpp"

#include <algorithm>
#include <unordered_map>

#include "medaug/errors.hpp"

namespace medaug {

namespace {
const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<sep>",
                                                  "<eos>", "<lbl0>", "<lbl1>"};
}

Vocabulary::Vocabulary() : tokens_(kReservedTokens) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<LabeledDocument>& docs, std::size_t min_freq) {
    if (docs.empty()) throw ValidationError("build_vocab: empty corpus");

    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& doc : docs)
        for (const auto& tok : tokenize(doc.text)) ++freq[tok];

    std::vector<std::pair<std::string, std::size_t>> retained;
    retained.reserve(freq.size());
    for (const auto& [tok, n] : freq)
        if (n >= min_freq) retained.emplace_back(tok, n);
    std::sort(retained.begin(), retained.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_freq_ = min_freq;
    for (auto& [tok, n] : retained) {
        vocab.index_[tok] = vocab.tokens_.size();
        vocab.tokens_.push_back(tok);
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens, std::size_t min_freq) {
    if (tokens.size() < kNumReserved ||
        !std::equal(kReservedTokens.begin(), kReservedTokens.end(), tokens.begin())) {
        throw ValidationError("vocabulary token list must start with the reserved tokens");
    }
    Vocabulary vocab;
    vocab.min_freq_ = min_freq;
    for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
        vocab.index_[tokens[i]] = vocab.tokens_.size();
        vocab.tokens_.push_back(tokens[i]);
    }
    return vocab;
}

std::size_t Vocabulary::token_to_id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::id_to_token(std::size_t id) const {
    if (id >= tokens_.size()) {
        throw IndexError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                         std::to_string(tokens_.size()));
    }
    return tokens_[id];
}

std::vector<std::size_t> Vocabulary::encode_text(const std::string& text) const {
    std::vector<std::size_t> ids;
    for (const auto& tok : tokenize(text)) ids.push_back(token_to_id(tok));
    return ids;
}

std::string Vocabulary::decode(const std::vector<std::size_t>& ids) const {
    std::string out;
    for (std::size_t id : ids) {
        if (!out.empty()) out += ' ';
        out += id_to_token(id);
    }
    return out;
}

std::vector<std::size_t> encode_labeled(const LabeledDocument& doc, const Vocabulary& vocab,
                                        std::size_t max_len) {
    validate_document(doc);
    if (max_len < 4) throw ValidationError("encode_labeled: max_len must be at least 4");

    std::vector<std::size_t> seq;
    seq.reserve(max_len);
    seq.push_back(Vocabulary::label_id(doc.label));
    seq.push_back(kSepId);
    const std::size_t budget = max_len - 3;  // prefix is 2 tokens, EOS is 1
    for (const auto& tok : tokenize(doc.text)) {
        if (seq.size() - 2 >= budget) break;
        seq.push_back(vocab.token_to_id(tok));
    }
    seq.push_back(kEosId);
    return seq;
}

}  // namespace medaug
