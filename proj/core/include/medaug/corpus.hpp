// Labeled-document data model: splits, imbalance handling, JSONL io.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace medaug {

enum class DocOrigin { original, synthetic };

const char* to_string(DocOrigin origin);
DocOrigin doc_origin_from_string(const std::string& s);

struct LabeledDocument {
    std::string id;
    int label = 0;  // 0 or 1
    std::string text;
    DocOrigin origin = DocOrigin::original;
};

// Lowercased whitespace tokenization.
std::vector<std::string> tokenize(const std::string& text);

// Throws ValidationError unless label is binary, text tokenizes to
// something non-empty, and the id is non-empty.
void validate_document(const LabeledDocument& doc);

struct CorpusSplit {
    std::vector<LabeledDocument> train;
    std::vector<LabeledDocument> valid;
    std::vector<LabeledDocument> test;
    std::vector<LabeledDocument> synthetic;

    // train followed by synthetic; each member exactly once.
    std::vector<LabeledDocument> combined() const;
};

struct SplitRatios {
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
};

// Seeded shuffle then contiguous partition. valid/test sizes are floored,
// the remainder goes to train.
CorpusSplit make_split(std::vector<LabeledDocument> docs, SplitRatios ratios,
                       std::uint64_t seed);

// All minority-class docs plus an equally sized seeded random subset of the
// majority class, deterministically shuffled.
std::vector<LabeledDocument> undersample_balanced(const std::vector<LabeledDocument>& train,
                                                  std::uint64_t seed);

std::size_t count_label(const std::vector<LabeledDocument>& docs, int label);

std::vector<LabeledDocument> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<LabeledDocument>& docs, const std::string& path);

}  // namespace medaug
