#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgda/kg/graph.hpp"
#include "kgda/num/matrix.hpp"
#include "kgda/num/params.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/num/tape.hpp"

namespace kgda::rgcn {

struct Dims {
    int d0 = 100;  // node feature width
    int d1 = 100;  // hidden layer width
    int d = 100;   // embedding width
};

// Two-layer relational graph encoder with a DistMult edge decoder. Each
// relation gets one weight matrix per layer and direction (messages flow
// both along and against edges); self-connections use a separate weight.
// Decoder diagonals live in one matrix with a row per relation.
class Autoencoder {
  public:
    Autoencoder(std::vector<std::string> node_names,
                std::vector<std::string> relation_names, Dims dims,
                bool freeze_node_init, num::Rng& init_rng);

    static Autoencoder from_graph(const kg::MultiRelGraph& g, Dims dims,
                                  bool freeze_node_init, num::Rng& init_rng);

    const Dims& dims() const { return dims_; }
    int node_count() const { return static_cast<int>(node_names_.size()); }
    int relation_count() const {
        return static_cast<int>(relation_names_.size());
    }
    const std::vector<std::string>& node_names() const { return node_names_; }
    const std::vector<std::string>& relation_names() const {
        return relation_names_;
    }
    bool node_init_frozen() const { return freeze_node_init_; }

    int node_row(const std::string& name) const;        // -1 when unknown
    int relation_index(const std::string& name) const;  // -1 when unknown

    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }

    int idx_node_init() const { return idx_node_init_; }
    int idx_self(int layer) const;
    // slot 2r passes messages along relation r, slot 2r+1 against it.
    int idx_rel(int layer, int slot) const;
    int idx_decoder() const { return idx_dec_; }

    std::uint64_t checksum() const { return params_.checksum(); }

    void save(const std::string& path) const;
    static Autoencoder load(const std::string& path);

  private:
    Autoencoder(std::vector<std::string> node_names,
                std::vector<std::string> relation_names, Dims dims,
                bool freeze_node_init, num::ParamStore params);
    void index_params();

    Dims dims_;
    bool freeze_node_init_ = false;
    std::vector<std::string> node_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, int> node_rows_;
    std::unordered_map<std::string, int> relation_idx_;
    num::ParamStore params_;
    int idx_node_init_ = -1;
    int idx_self1_ = -1, idx_self2_ = -1;
    std::vector<int> idx_rel1_, idx_rel2_;
    int idx_dec_ = -1;
};

// Two-layer forward producing one output row per entry of `rows` (model
// node ids), with messages passed only along `edges` (model-id triplets,
// already deduplicated). Differentiable through every parameter.
num::Var build_encode(num::Tape& tape, const Autoencoder& model,
                      const std::vector<int>& rows,
                      const std::vector<kg::Triplet>& edges);

// Non-tape convenience wrapper around build_encode.
num::Matrix encode_rows(const Autoencoder& model, const std::vector<int>& rows,
                        const std::vector<kg::Triplet>& edges);

// Embedding for every node of `subgraph` (row order = subgraph node ids),
// messages restricted to the subgraph's own edges. Nodes or relations the
// model was not built over raise ConfigError.
num::Matrix encode_nodes(const kg::MultiRelGraph& subgraph,
                         const Autoencoder& model);

// logistic of sum_k h[k] * diag_r[k] * t[k]; symmetric in h and t.
double distmult_score(const Autoencoder& model, std::span<const double> h,
                      int rel, std::span<const double> t);

}  // namespace kgda::rgcn
