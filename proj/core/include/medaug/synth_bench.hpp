// Seed-deterministic pseudo-clinical benchmark corpus.
//
// Documents are filler-token streams with class-specific signal phrases
// (adjacent token bigrams) planted in them, so a phrase-count oracle gives
// a known performance ceiling on the corpus.
#pragma once

#include <cstdint>
#include <vector>

#include "medaug/corpus.hpp"
#include "medaug/rng.hpp"

namespace medaug {

struct SynthBenchSpec {
    std::size_t n_docs = 5000;
    std::size_t content_vocab = 200;     // filler tokens w0..w{n-1}
    std::size_t positive_phrases = 12;   // bigrams pos{j}a pos{j}b
    std::size_t negative_phrases = 12;   // bigrams neg{j}a neg{j}b
    std::size_t len_min = 18;            // filler token count range
    std::size_t len_max = 36;
    double positive_prior = 0.2;
    double label_noise = 0.0;            // stored-label flip rate
    std::uint64_t seed = 1;
};

void validate(const SynthBenchSpec& spec);

std::vector<LabeledDocument> synth_benchmark(const SynthBenchSpec& spec);

struct PhraseCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;
};

// Counts planted signal bigrams in a token stream.
PhraseCounts count_signal_phrases(const std::string& text);

// Bayes-style reference score from phrase counts, squashed into (0,1).
double phrase_oracle_score(const std::string& text);

// Content corruption for the synthetic-noise knob: strips positive-signal
// phrases and plants negative ones, keeping the stored label.
LabeledDocument corrupt_positive(const LabeledDocument& doc, Rng& rng,
                                 std::size_t negative_phrases);

}  // namespace medaug
