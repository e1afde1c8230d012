#include "medaug/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "medaug/errors.hpp"
#include "medaug/rng.hpp"

namespace medaug {

const char* to_string(DocOrigin origin) {
    return origin == DocOrigin::original ? "original" : "synthetic";
}

DocOrigin doc_origin_from_string(const std::string& s) {
    if (s == "original") return DocOrigin::original;
    if (s == "synthetic") return DocOrigin::synthetic;
    throw ValidationError("unknown document origin '" + s + "'");
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

void validate_document(const LabeledDocument& doc) {
    if (doc.label != 0 && doc.label != 1) {
        throw ValidationError("document '" + doc.id + "': label must be 0 or 1, got " +
                              std::to_string(doc.label));
    }
    if (doc.id.empty()) throw ValidationError("document with empty id");
    if (tokenize(doc.text).empty()) {
        throw ValidationError("document '" + doc.id + "': empty text");
    }
}

std::vector<LabeledDocument> CorpusSplit::combined() const {
    std::vector<LabeledDocument> out;
    out.reserve(train.size() + synthetic.size());
    out.insert(out.end(), train.begin(), train.end());
    out.insert(out.end(), synthetic.begin(), synthetic.end());
    return out;
}

CorpusSplit make_split(std::vector<LabeledDocument> docs, SplitRatios ratios,
                       std::uint64_t seed) {
    if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
        throw ValidationError("split ratios must sum to 1");
    }
    if (docs.size() < 3) {
        throw ValidationError("need at least 3 documents to split, got " +
                              std::to_string(docs.size()));
    }
    Rng rng(seed);
    rng.shuffle(docs);

    const auto n = static_cast<double>(docs.size());
    const auto n_valid = static_cast<std::size_t>(std::floor(n * ratios.valid + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    const std::size_t n_train = docs.size() - n_valid - n_test;

    CorpusSplit split;
    split.train.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.valid.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_train),
                       docs.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    split.test.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), docs.end());
    return split;
}

std::size_t count_label(const std::vector<LabeledDocument>& docs, int label) {
    std::size_t n = 0;
    for (const auto& d : docs)
        if (d.label == label) ++n;
    return n;
}

std::vector<LabeledDocument> undersample_balanced(const std::vector<LabeledDocument>& train,
                                                  std::uint64_t seed) {
    std::vector<LabeledDocument> pos, neg;
    for (const auto& d : train) (d.label == 1 ? pos : neg).push_back(d);
    if (pos.empty() || neg.empty()) {
        throw ValidationError("undersample_balanced: both classes must be present");
    }
    auto& minority = pos.size() <= neg.size() ? pos : neg;
    auto& majority = pos.size() <= neg.size() ? neg : pos;

    Rng rng(seed);
    rng.shuffle(majority);
    majority.resize(minority.size());

    std::vector<LabeledDocument> out;
    out.reserve(2 * minority.size());
    out.insert(out.end(), minority.begin(), minority.end());
    out.insert(out.end(), majority.begin(), majority.end());
    rng.shuffle(out);
    return out;
}

std::vector<LabeledDocument> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<LabeledDocument> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("invalid JSON", lineno);
        for (const char* key : {"id", "label", "text", "origin"}) {
            if (!j.contains(key)) {
                throw ParseError(std::string("missing field \"") + key + "\"", lineno);
            }
        }
        if (!j["label"].is_number_integer()) throw ParseError("\"label\" must be 0 or 1", lineno);
        LabeledDocument doc;
        doc.id = j["id"].get<std::string>();
        doc.label = j["label"].get<int>();
        doc.text = j["text"].get<std::string>();
        try {
            doc.origin = doc_origin_from_string(j["origin"].get<std::string>());
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
        if (doc.label != 0 && doc.label != 1) throw ParseError("\"label\" must be 0 or 1", lineno);
        docs.push_back(std::move(doc));
    }
    return docs;
}

void save_jsonl(const std::vector<LabeledDocument>& docs, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& d : docs) {
        nlohmann::json j{{"id", d.id}, {"label", d.label}, {"text", d.text},
                         {"origin", to_string(d.origin)}};
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed on '" + path + "'");
}

}  // namespace medaug
