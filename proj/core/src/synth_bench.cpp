#include "medaug/synth_bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "medaug/errors.hpp"

namespace medaug {

namespace {

std::string filler_token(std::size_t i) { return "w" + std::to_string(i); }

std::string phrase_token(bool positive, std::size_t j, bool second) {
    std::string t = positive ? "pos" : "neg";
    t += std::to_string(j);
    t += second ? 'b' : 'a';
    return t;
}

// Parses pos{j}a / pos{j}b / neg{j}a / neg{j}b. Returns false for anything else.
bool parse_signal_token(const std::string& tok, bool& positive, std::size_t& index,
                        bool& second) {
    std::size_t base = 0;
    if (tok.rfind("pos", 0) == 0) {
        positive = true;
        base = 3;
    } else if (tok.rfind("neg", 0) == 0) {
        positive = false;
        base = 3;
    } else {
        return false;
    }
    if (tok.size() < base + 2) return false;
    char tail = tok.back();
    if (tail != 'a' && tail != 'b') return false;
    second = tail == 'b';
    index = 0;
    for (std::size_t k = base; k + 1 < tok.size(); ++k) {
        char c = tok[k];
        if (c < '0' || c > '9') return false;
        index = index * 10 + static_cast<std::size_t>(c - '0');
    }
    return true;
}

// Places n whole bigrams into gaps of the current token stream in one pass,
// so no phrase can land inside (and break) another.
void insert_phrases(std::vector<std::string>& tokens, bool positive, std::size_t n,
                    std::size_t inventory, Rng& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> placed;  // (gap, phrase index)
    placed.reserve(n);
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t j = rng.below(inventory);
        placed.emplace_back(rng.below(tokens.size() + 1), j);
    }
    std::stable_sort(placed.begin(), placed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::string> out;
    out.reserve(tokens.size() + 2 * n);
    std::size_t next = 0;
    for (std::size_t gap = 0; gap <= tokens.size(); ++gap) {
        while (next < placed.size() && placed[next].first == gap) {
            out.push_back(phrase_token(positive, placed[next].second, false));
            out.push_back(phrase_token(positive, placed[next].second, true));
            ++next;
        }
        if (gap < tokens.size()) out.push_back(tokens[gap]);
    }
    tokens = std::move(out);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) text += ' ';
        text += tokens[i];
    }
    return text;
}

}  // namespace

void validate(const SynthBenchSpec& spec) {
    if (spec.n_docs == 0) throw ValidationError("n_docs must be positive");
    if (spec.content_vocab == 0) throw ValidationError("content_vocab must be positive");
    if (spec.positive_phrases == 0 || spec.negative_phrases == 0)
        throw ValidationError("phrase inventories must be non-empty");
    if (spec.len_min == 0 || spec.len_max < spec.len_min)
        throw ValidationError("document length range is empty");
    if (!(spec.positive_prior > 0.0) || !(spec.positive_prior < 1.0))
        throw ValidationError("positive_prior must lie in (0,1)");
    if (spec.label_noise < 0.0 || spec.label_noise >= 1.0)
        throw ValidationError("label_noise must lie in [0,1)");
}

std::vector<LabeledDocument> synth_benchmark(const SynthBenchSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    std::vector<LabeledDocument> docs;
    docs.reserve(spec.n_docs);
    char idbuf[32];
    for (std::size_t i = 0; i < spec.n_docs; ++i) {
        bool latent = rng.bernoulli(spec.positive_prior);

        std::size_t len = spec.len_min + rng.below(spec.len_max - spec.len_min + 1);
        std::vector<std::string> tokens;
        tokens.reserve(len + 8);
        for (std::size_t t = 0; t < len; ++t)
            tokens.push_back(filler_token(rng.below(spec.content_vocab)));

        std::size_t n_phrases = 1 + std::min<std::uint64_t>(rng.geometric(0.5), 3);
        std::size_t inventory = latent ? spec.positive_phrases : spec.negative_phrases;
        insert_phrases(tokens, latent, n_phrases, inventory, rng);

        bool flipped = spec.label_noise > 0.0 && rng.bernoulli(spec.label_noise);
        int label = (latent != flipped) ? 1 : 0;

        std::snprintf(idbuf, sizeof(idbuf), "bench-%06zu", i);
        docs.push_back({idbuf, label, join_tokens(tokens), DocOrigin::original});
    }
    return docs;
}

PhraseCounts count_signal_phrases(const std::string& text) {
    std::vector<std::string> tokens = tokenize(text);
    PhraseCounts counts;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        bool pos_a = false, pos_b = false, second = false;
        std::size_t idx_a = 0, idx_b = 0;
        if (!parse_signal_token(tokens[i], pos_a, idx_a, second) || second) continue;
        if (!parse_signal_token(tokens[i + 1], pos_b, idx_b, second) || !second) continue;
        if (pos_a != pos_b || idx_a != idx_b) continue;
        if (pos_a)
            ++counts.positive;
        else
            ++counts.negative;
        ++i;  // bigram consumed
    }
    return counts;
}

double phrase_oracle_score(const std::string& text) {
    PhraseCounts counts = count_signal_phrases(text);
    double d = static_cast<double>(counts.positive) - static_cast<double>(counts.negative);
    return 1.0 / (1.0 + std::exp(-d));
}

LabeledDocument corrupt_positive(const LabeledDocument& doc, Rng& rng,
                                 std::size_t negative_phrases) {
    if (negative_phrases == 0)
        throw ValidationError("corrupt_positive needs a non-empty negative inventory");
    std::vector<std::string> tokens = tokenize(doc.text);
    std::vector<std::string> kept;
    kept.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        bool positive = false, second = false;
        std::size_t idx_a = 0;
        if (i + 1 < tokens.size() && parse_signal_token(tokens[i], positive, idx_a, second) &&
            positive && !second) {
            bool positive_b = false, second_b = false;
            std::size_t idx_b = 0;
            if (parse_signal_token(tokens[i + 1], positive_b, idx_b, second_b) && positive_b &&
                second_b && idx_a == idx_b) {
                ++i;  // drop the bigram
                continue;
            }
        }
        kept.push_back(tokens[i]);
    }
    if (kept.empty()) kept.push_back(filler_token(0));
    insert_phrases(kept, false, 2, negative_phrases, rng);

    LabeledDocument out = doc;
    out.text = join_tokens(kept);
    return out;
}

}  // namespace medaug
