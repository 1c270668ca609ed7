#pragma once

#include <cstdint>
#include <vector>

#include "kgda/adv/model.hpp"
#include "kgda/corpus/document.hpp"
#include "kgda/feat/extract.hpp"
#include "kgda/num/matrix.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/num/tape.hpp"

namespace kgda::adv {

// Domain-loss weight schedule 2/(1+exp(-10p)) - 1 over training progress
// p in [0,1]. Values outside the range are clamped with a warning.
double lambda_at(double p);

struct TrainConfig {
    Variant variant = Variant::full;
    int bow_dim = 5000;
    int hidden = 100;
    double dropout = 0.25;
    int epochs = 50;
    int batch = 32;  // per domain
    double lr = 1e-3;
    bool sgd = false;
    double gamma = 1.0;
    bool lambda_restart_each_epoch = false;
    std::uint64_t seed = 0;
};

struct TrainData {
    std::vector<corpus::Document> src_train;
    std::vector<corpus::Document> src_test;
    std::vector<corpus::Document> tgt_train;
    std::vector<corpus::Document> tgt_test;
    const feat::FeatureTable* features = nullptr;
};

struct EpochMetrics {
    double loss_cls = 0.0;
    double loss_adv = 0.0;
    double loss_recon = 0.0;
    double source_train_acc = 0.0;
    double target_test_acc = 0.0;
    double disc_acc = 0.0;
};

struct TrainResult {
    Classifier model;
    std::vector<EpochMetrics> metrics;
};

struct BatchLosses {
    num::Var cls;
    num::Var adv;
    num::Var recon;
    num::Var total;
    num::Var cls_logits;  // [src_rows, 2]
    num::Var dom_logits;  // [rows, 1]
};

// Builds the batch objective on the tape. Rows of x_bow/x_cg are source
// rows first (src_rows of them, with class labels src_labels and domain
// target 1), then target rows (domain target 0). reverse_mult scales the
// gradient flowing from the discriminator back into the shared features;
// training uses -1.
BatchLosses build_losses(num::Tape& tape, const Classifier& model,
                         const num::Matrix& x_bow, const num::Matrix& x_cg,
                         int src_rows, const std::vector<int>& src_labels,
                         double lambda, double gamma, double dropout_p,
                         num::Rng& dropout_rng, double reverse_mult);

TrainResult train(const TrainConfig& cfg, const TrainData& data);

// Fraction of documents whose predicted sentiment matches the stored label.
double evaluate(const Classifier& model,
                const std::vector<corpus::Document>& docs,
                const feat::FeatureTable* features);

// Fraction of documents the discriminator assigns to the right domain
// (logit >= 0 reads as source).
double discriminator_accuracy(const Classifier& model,
                              const std::vector<corpus::Document>& src_docs,
                              const std::vector<corpus::Document>& tgt_docs,
                              const feat::FeatureTable* features);

}  // namespace kgda::adv
