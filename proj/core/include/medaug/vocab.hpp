// Token <-> index mapping with reserved control tokens.
#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "medaug/corpus.hpp"

namespace medaug {

// Reserved indices. Label tokens carry the class of a label-prefixed
// sequence; SEP separates label from text and EOS terminates it.
inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kSepId = 2;
inline constexpr std::size_t kEosId = 3;
inline constexpr std::size_t kLbl0Id = 4;
inline constexpr std::size_t kLbl1Id = 5;
inline constexpr std::size_t kNumReserved = 6;

class Vocabulary {
public:
    Vocabulary();

    // Content tokens get indices starting at kNumReserved, ordered by
    // (frequency desc, token lexicographic).
    static Vocabulary build(const std::vector<LabeledDocument>& docs, std::size_t min_freq);

    // Reconstruction from an index-ordered token list (checkpoint load).
    static Vocabulary from_tokens(const std::vector<std::string>& tokens, std::size_t min_freq);

    std::size_t size() const noexcept { return tokens_.size(); }
    std::size_t min_freq() const noexcept { return min_freq_; }

    // Unknown tokens map to UNK.
    std::size_t token_to_id(const std::string& token) const;
    const std::string& id_to_token(std::size_t id) const;

    bool is_reserved(std::size_t id) const noexcept { return id < kNumReserved; }
    static std::size_t label_id(int label) { return label == 0 ? kLbl0Id : kLbl1Id; }

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    std::vector<std::size_t> encode_text(const std::string& text) const;
    std::string decode(const std::vector<std::size_t>& ids) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t min_freq_ = 1;
};

// [LBL{label}, SEP, tokens..., EOS], truncated so the total length is at
// most max_len; EOS is always present.
std::vector<std::size_t> encode_labeled(const LabeledDocument& doc, const Vocabulary& vocab,
                                        std::size_t max_len);

}  // namespace medaug
