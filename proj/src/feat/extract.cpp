#include "kgda/feat/extract.hpp"

#include <filesystem>

#include "kgda/errors.hpp"
#include "kgda/log.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::feat {

namespace {

constexpr std::uint32_t kMagic = 0x4B474643;  // "KGFC"
constexpr std::uint32_t kVersion = 1;

}  // namespace

GraphFeature extract(const corpus::Document& doc,
                     const kg::MultiRelGraph& g_prime,
                     const rgcn::Autoencoder& model,
                     const corpus::ContentTagger& tagger) {
    GraphFeature out;
    out.doc_id = doc.id;
    out.vec.assign(model.dims().d, 0.0);

    auto words = corpus::content_words(doc, tagger);
    auto sub = kg::document_subgraph(g_prime, words);
    out.node_count = sub.node_count();
    if (sub.empty()) return out;

    auto emb = rgcn::encode_nodes(sub, model);
    for (int i = 0; i < emb.rows(); ++i)
        for (int k = 0; k < emb.cols(); ++k) out.vec[k] += emb(i, k);
    for (auto& v : out.vec) v /= emb.rows();
    return out;
}

void FeatureTable::put(GraphFeature f) {
    if (static_cast<int>(f.vec.size()) != dim_)
        throw ShapeError("feature width mismatch");
    auto it = by_id_.find(f.doc_id);
    if (it == by_id_.end()) {
        order_.push_back(f.doc_id);
        by_id_.emplace(f.doc_id, std::move(f));
    } else {
        it->second = std::move(f);
    }
}

const GraphFeature* FeatureTable::find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : &it->second;
}

void FeatureTable::save(const std::string& path) const {
    util::BinWriter w(path);
    w.u32(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(dim_));
    w.u64(params_checksum_);
    w.u32(static_cast<std::uint32_t>(order_.size()));
    for (const auto& id : order_) {
        const auto& f = by_id_.at(id);
        w.str(id);
        w.u32(static_cast<std::uint32_t>(f.node_count));
        w.f64_array(f.vec.data(), f.vec.size());
    }
    w.commit();
}

std::optional<FeatureTable> FeatureTable::try_load(const std::string& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        util::BinReader r(path);
        if (r.u32() != kMagic || r.u32() != kVersion) return std::nullopt;
        int dim = static_cast<int>(r.u32());
        std::uint64_t sum = r.u64();
        FeatureTable table(dim, sum);
        std::uint32_t n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            GraphFeature f;
            f.doc_id = r.str();
            f.node_count = static_cast<int>(r.u32());
            f.vec.resize(dim);
            r.f64_array(f.vec.data(), f.vec.size());
            table.put(std::move(f));
        }
        return table;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

FeatureTable extract_all(const std::vector<corpus::Document>& docs,
                         const kg::MultiRelGraph& g_prime,
                         const rgcn::Autoencoder& model,
                         const corpus::ContentTagger& tagger,
                         const std::string& cache_path) {
    std::uint64_t sum = model.checksum();
    int d = model.dims().d;

    std::optional<FeatureTable> cached;
    if (!cache_path.empty()) {
        cached = FeatureTable::try_load(cache_path);
        if (cached && (cached->params_checksum() != sum || cached->dim() != d)) {
            warn("feature cache " + cache_path +
                 " was built under different parameters; recomputing");
            cached.reset();
        }
    }

    FeatureTable table(d, sum);
    bool computed = false;
    for (const auto& doc : docs) {
        if (table.find(doc.id)) continue;
        if (cached) {
            if (const auto* hit = cached->find(doc.id)) {
                table.put(*hit);
                continue;
            }
        }
        table.put(extract(doc, g_prime, model, tagger));
        computed = true;
    }
    if (!cache_path.empty() && (computed || !cached))
        table.save(cache_path);
    return table;
}

}  // namespace kgda::feat
