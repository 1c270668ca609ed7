#pragma once

#include <string>
#include <vector>

#include "kgda/corpus/bow.hpp"
#include "kgda/corpus/document.hpp"
#include "kgda/feat/extract.hpp"
#include "kgda/num/matrix.hpp"
#include "kgda/num/params.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/num/tape.hpp"

namespace kgda::adv {

// Wiring of the sentiment classifier C and domain discriminator D over the
// text path z_dann and the graph path z_grp:
//   dann, dann_plus: text path only (graph parameters idle)
//   v1:   like full but with one reconstruction decoder per domain
//   v2:   D sees z_dann, C sees [z_dann z_grp]
//   v3:   D sees [z_dann z_grp], C sees z_dann
//   full: C and D both see [z_dann z_grp]
enum class Variant { dann, dann_plus, v1, v2, v3, full };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

class Classifier {
  public:
    Classifier(Variant variant, int graph_dim, int hidden,
               corpus::BowVocab vocab, num::Rng& init_rng);

    Variant variant() const { return variant_; }
    int bow_dim() const { return vocab_.dim(); }
    int graph_dim() const { return graph_dim_; }
    int hidden() const { return hidden_; }
    const corpus::BowVocab& vocab() const { return vocab_; }

    bool uses_graph() const {
        return variant_ != Variant::dann && variant_ != Variant::dann_plus;
    }
    bool per_domain_decoders() const { return variant_ == Variant::v1; }
    bool classifier_sees_graph() const {
        return variant_ == Variant::v2 || variant_ == Variant::full ||
               variant_ == Variant::v1;
    }
    bool discriminator_sees_graph() const {
        return variant_ == Variant::v3 || variant_ == Variant::full ||
               variant_ == Variant::v1;
    }

    num::ParamStore& params() { return params_; }
    const num::ParamStore& params() const { return params_; }
    int idx(const std::string& name) const;

    std::uint64_t checksum() const { return params_.checksum(); }

    void save(const std::string& path) const;
    static Classifier load(const std::string& path);

  private:
    Classifier(Variant variant, int graph_dim, int hidden,
               corpus::BowVocab vocab, num::ParamStore params);
    void validate_shapes() const;

    Variant variant_;
    int graph_dim_;
    int hidden_;
    corpus::BowVocab vocab_;
    num::ParamStore params_;
};

// Dense BOW rows for the documents, and graph-feature rows (zeros when the
// table is null). A graph variant with a null table raises ConfigError.
void assemble_inputs(const Classifier& model,
                     const std::vector<corpus::Document>& docs,
                     const feat::FeatureTable* features, num::Matrix* bow,
                     num::Matrix* cg);

// Evaluation-mode forward passes over all rows.
num::Matrix class_logits(const Classifier& model, const num::Matrix& x_bow,
                         const num::Matrix& x_cg);
num::Matrix domain_logits(const Classifier& model, const num::Matrix& x_bow,
                          const num::Matrix& x_cg);

}  // namespace kgda::adv
