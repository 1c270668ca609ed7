#include "kgda/corpus/bow.hpp"

#include <algorithm>
#include <cmath>

#include "kgda/errors.hpp"

namespace kgda::corpus {

std::vector<std::string> terms_of(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size() * 2);
    for (const auto& t : tokens) out.push_back(t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
        out.push_back(tokens[i] + " " + tokens[i + 1]);
    return out;
}

void BowVocab::serialize(util::BinWriter& w) const {
    w.u32(static_cast<std::uint32_t>(terms.size()));
    for (int i = 0; i < dim(); ++i) {
        w.str(terms[i]);
        w.f64(idf[i]);
    }
}

BowVocab BowVocab::deserialize(util::BinReader& r) {
    BowVocab v;
    std::uint32_t n = r.u32();
    v.terms.reserve(n);
    v.idf.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        v.terms.push_back(r.str());
        v.idf.push_back(r.f64());
        v.index[v.terms.back()] = static_cast<int>(i);
    }
    return v;
}

BowVocab fit_vocab(std::span<const Document* const> docs, int dim) {
    if (dim <= 0) throw ConfigError("bow dim must be positive");
    if (docs.empty()) throw ConfigError("cannot fit vocabulary on an empty document set");

    std::unordered_map<std::string, int> df;
    std::vector<std::string> seen;
    for (const Document* d : docs) {
        seen.clear();
        for (auto& term : terms_of(d->tokens)) seen.push_back(std::move(term));
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (const auto& term : seen) ++df[term];
    }

    std::vector<std::pair<std::string, int>> ranked(df.begin(), df.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > dim) ranked.resize(dim);

    const double n = static_cast<double>(docs.size());
    BowVocab v;
    v.terms.reserve(ranked.size());
    v.idf.reserve(ranked.size());
    for (auto& [term, freq] : ranked) {
        v.index[term] = v.dim();
        v.terms.push_back(term);
        v.idf.push_back(std::log((1.0 + n) / (1.0 + freq)) + 1.0);
    }
    return v;
}

BowVocab fit_vocab(const std::vector<Document>& docs, int dim) {
    std::vector<const Document*> ptrs;
    ptrs.reserve(docs.size());
    for (const auto& d : docs) ptrs.push_back(&d);
    return fit_vocab(std::span<const Document* const>(ptrs), dim);
}

std::vector<double> featurize(const Document& doc, const BowVocab& vocab) {
    std::vector<double> x(vocab.dim(), 0.0);
    for (const auto& term : terms_of(doc.tokens)) {
        auto it = vocab.index.find(term);
        if (it != vocab.index.end()) x[it->second] += 1.0;
    }
    double ss = 0.0;
    for (int i = 0; i < vocab.dim(); ++i) {
        x[i] *= vocab.idf[i];
        ss += x[i] * x[i];
    }
    if (ss > 0.0) {
        const double inv = 1.0 / std::sqrt(ss);
        for (double& v : x) v *= inv;
    }
    return x;
}

}  // namespace kgda::corpus
