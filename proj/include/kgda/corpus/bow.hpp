#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgda/corpus/document.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::corpus {

// Unigrams plus adjacent bigrams (joined with a single space), in token
// order with repeats, ready for counting.
std::vector<std::string> terms_of(const std::vector<std::string>& tokens);

struct BowVocab {
    std::vector<std::string> terms;  // index order
    std::vector<double> idf;
    std::unordered_map<std::string, int> index;

    int dim() const { return static_cast<int>(terms.size()); }

    void serialize(util::BinWriter& w) const;
    static BowVocab deserialize(util::BinReader& r);
};

// Document-frequency vocabulary selection over the given (training) docs:
// the dim most frequent terms, ties broken lexicographically. idf uses the
// smoothed form ln((1+N)/(1+df)) + 1.
BowVocab fit_vocab(std::span<const Document* const> docs, int dim);
BowVocab fit_vocab(const std::vector<Document>& docs, int dim);

// Raw term counts * idf, L2-normalized (all-zero vectors stay zero).
// Out-of-vocabulary terms are ignored.
std::vector<double> featurize(const Document& doc, const BowVocab& vocab);

}  // namespace kgda::corpus
