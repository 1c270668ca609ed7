#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgda/corpus/document.hpp"
#include "kgda/corpus/tagger.hpp"
#include "kgda/kg/graph.hpp"
#include "kgda/rgcn/model.hpp"

namespace kgda::feat {

struct GraphFeature {
    std::string doc_id;
    std::vector<double> vec;  // length d; all zero iff node_count == 0
    int node_count = 0;
};

// Content words -> their radius-1 subgraph -> encoder forward -> mean over
// the subgraph's unique nodes. Documents whose words miss the graph get the
// zero vector.
GraphFeature extract(const corpus::Document& doc,
                     const kg::MultiRelGraph& g_prime,
                     const rgcn::Autoencoder& model,
                     const corpus::ContentTagger& tagger);

class FeatureTable {
  public:
    FeatureTable(int dim, std::uint64_t params_checksum)
        : dim_(dim), params_checksum_(params_checksum) {}

    int dim() const { return dim_; }
    std::uint64_t params_checksum() const { return params_checksum_; }
    std::size_t size() const { return order_.size(); }

    void put(GraphFeature f);
    const GraphFeature* find(const std::string& doc_id) const;
    const std::vector<std::string>& ids() const { return order_; }

    void save(const std::string& path) const;
    static std::optional<FeatureTable> try_load(const std::string& path);

  private:
    int dim_;
    std::uint64_t params_checksum_;
    std::vector<std::string> order_;
    std::unordered_map<std::string, GraphFeature> by_id_;
};

// Features for every document, backed by an on-disk cache keyed by the
// parameter checksum. A cache written under different parameters is
// recomputed with a warning. Empty cache_path disables persistence.
FeatureTable extract_all(const std::vector<corpus::Document>& docs,
                         const kg::MultiRelGraph& g_prime,
                         const rgcn::Autoencoder& model,
                         const corpus::ContentTagger& tagger,
                         const std::string& cache_path);

}  // namespace kgda::feat
