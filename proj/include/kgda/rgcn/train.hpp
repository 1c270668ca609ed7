#pragma once

#include <cstdint>
#include <vector>

#include "kgda/kg/graph.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/rgcn/model.hpp"

namespace kgda::rgcn {

struct TripletSample {
    int head;
    int rel;
    int tail;
    double label;  // 1 real edge, 0 corrupted
};

struct PretrainConfig {
    Dims dims{};
    int epochs = 200;
    int batch_positives = 512;
    double lr = 0.01;
    int patience = 20;  // epochs without improvement before stopping; <=0 disables
    bool freeze_node_init = false;
    std::uint64_t seed = 0;
};

struct PretrainResult {
    Autoencoder model;
    std::vector<double> epoch_loss;
};

// One negative per positive. Each attempt redraws one uniformly chosen slot
// (head, relation, or tail) with a uniform candidate and keeps the first
// corruption that is not a real edge; attempts are bounded, so a graph too
// dense to corrupt raises SamplingError.
std::vector<TripletSample> sample_negatives(
    const kg::MultiRelGraph& g, const std::vector<kg::Triplet>& positives,
    num::Rng& rng);

// Cross-entropy of DistMult scores over the samples, normalized by twice
// the positive count. Embedding row i holds model node i. Scalar loop,
// no tape involved.
double link_prediction_loss(const Autoencoder& model,
                            const num::Matrix& embeddings,
                            const std::vector<TripletSample>& samples);

// Same loss on the tape, for training.
num::Var build_link_loss(num::Tape& tape, const Autoencoder& model,
                         num::Var embeddings,
                         const std::vector<TripletSample>& samples);

// Adam on the link-prediction loss over shuffled edge minibatches with
// full-graph message passing. Stops early when the epoch loss stops
// improving. Deterministic given cfg.seed.
PretrainResult pretrain(const kg::MultiRelGraph& g, const PretrainConfig& cfg);

// Fraction of (positive, negative) score pairs ranked correctly, ties at
// half weight.
double rank_auc(const std::vector<double>& pos, const std::vector<double>& neg);

struct AucConfig {
    double holdout_frac = 0.1;
    int neg_per_pos = 5;
    std::uint64_t seed = 0;
};

// Link-prediction AUC on a random holdout: the held edges are scored
// against sampled corruptions while message passing sees only the rest.
double heldout_auc(const kg::MultiRelGraph& g, const Autoencoder& model,
                   const AucConfig& cfg = {});

}  // namespace kgda::rgcn
