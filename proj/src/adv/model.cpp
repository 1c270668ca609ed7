#include "kgda/adv/model.hpp"

#include <utility>

#include "kgda/errors.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::adv {

namespace {

constexpr std::uint32_t kMagic = 0x4B474144;  // "KGAD"
constexpr std::uint32_t kVersion = 1;

const char* kVariantNames[] = {"dann", "dann_plus", "v1", "v2", "v3", "full"};

}  // namespace

const char* to_string(Variant v) {
    return kVariantNames[static_cast<int>(v)];
}

Variant variant_from_string(const std::string& s) {
    for (int i = 0; i < 6; ++i)
        if (s == kVariantNames[i]) return static_cast<Variant>(i);
    throw ConfigError("unknown variant: " + s);
}

Classifier::Classifier(Variant variant, int graph_dim, int hidden,
                       corpus::BowVocab vocab, num::Rng& init_rng)
    : variant_(variant),
      graph_dim_(graph_dim),
      hidden_(hidden),
      vocab_(std::move(vocab)) {
    if (graph_dim_ <= 0 || hidden_ <= 0 || vocab_.dim() <= 0)
        throw ConfigError("layer widths must be positive");
    int cls_in = classifier_sees_graph() ? 2 * hidden_ : hidden_;
    int dom_in = discriminator_sees_graph() ? 2 * hidden_ : hidden_;

    params_.add("m.w", num::glorot_init(hidden_, vocab_.dim(), init_rng));
    params_.add("m.b", num::Matrix(1, hidden_));
    params_.add("g.w", num::glorot_init(hidden_, graph_dim_, init_rng));
    params_.add("g.b", num::Matrix(1, hidden_));
    params_.add("c.w", num::glorot_init(2, cls_in, init_rng));
    params_.add("c.b", num::Matrix(1, 2));
    params_.add("d.w1", num::glorot_init(hidden_, dom_in, init_rng));
    params_.add("d.b1", num::Matrix(1, hidden_));
    params_.add("d.w2", num::glorot_init(1, hidden_, init_rng));
    params_.add("d.b2", num::Matrix(1, 1));
    if (per_domain_decoders()) {
        params_.add("r.src.w", num::glorot_init(graph_dim_, hidden_, init_rng));
        params_.add("r.src.b", num::Matrix(1, graph_dim_));
        params_.add("r.tgt.w", num::glorot_init(graph_dim_, hidden_, init_rng));
        params_.add("r.tgt.b", num::Matrix(1, graph_dim_));
    } else {
        params_.add("r.w", num::glorot_init(graph_dim_, hidden_, init_rng));
        params_.add("r.b", num::Matrix(1, graph_dim_));
    }
}

Classifier::Classifier(Variant variant, int graph_dim, int hidden,
                       corpus::BowVocab vocab, num::ParamStore params)
    : variant_(variant),
      graph_dim_(graph_dim),
      hidden_(hidden),
      vocab_(std::move(vocab)),
      params_(std::move(params)) {
    validate_shapes();
}

void Classifier::validate_shapes() const {
    auto need = [&](const char* name, int rows, int cols) {
        int i = params_.index_of(name);
        if (i < 0) throw ParseError(std::string("checkpoint missing ") + name);
        const auto& v = params_.value(i);
        if (v.rows() != rows || v.cols() != cols)
            throw ParseError(std::string("checkpoint parameter ") + name +
                             " has wrong shape");
    };
    int cls_in = classifier_sees_graph() ? 2 * hidden_ : hidden_;
    int dom_in = discriminator_sees_graph() ? 2 * hidden_ : hidden_;
    need("m.w", hidden_, vocab_.dim());
    need("m.b", 1, hidden_);
    need("g.w", hidden_, graph_dim_);
    need("g.b", 1, hidden_);
    need("c.w", 2, cls_in);
    need("c.b", 1, 2);
    need("d.w1", hidden_, dom_in);
    need("d.b1", 1, hidden_);
    need("d.w2", 1, hidden_);
    need("d.b2", 1, 1);
    if (per_domain_decoders()) {
        need("r.src.w", graph_dim_, hidden_);
        need("r.src.b", 1, graph_dim_);
        need("r.tgt.w", graph_dim_, hidden_);
        need("r.tgt.b", 1, graph_dim_);
    } else {
        need("r.w", graph_dim_, hidden_);
        need("r.b", 1, graph_dim_);
    }
}

int Classifier::idx(const std::string& name) const {
    int i = params_.index_of(name);
    if (i < 0) throw ConfigError("unknown parameter: " + name);
    return i;
}

void Classifier::save(const std::string& path) const {
    util::BinWriter w(path);
    w.u32(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(variant_));
    w.u32(static_cast<std::uint32_t>(graph_dim_));
    w.u32(static_cast<std::uint32_t>(hidden_));
    vocab_.serialize(w);
    params_.serialize(w);
    w.u64(params_.checksum());
    w.commit();
}

Classifier Classifier::load(const std::string& path) {
    util::BinReader r(path);
    if (r.u32() != kMagic)
        throw ParseError("not a classifier checkpoint: " + path);
    if (r.u32() != kVersion)
        throw ParseError("unsupported checkpoint version in " + path);
    auto variant = static_cast<Variant>(r.u32());
    if (static_cast<int>(variant) < 0 || static_cast<int>(variant) > 5)
        throw ParseError("bad variant tag in " + path);
    int graph_dim = static_cast<int>(r.u32());
    int hidden = static_cast<int>(r.u32());
    auto vocab = corpus::BowVocab::deserialize(r);
    auto params = num::ParamStore::deserialize(r);
    if (r.u64() != params.checksum())
        throw ParseError("checkpoint checksum mismatch in " + path);
    return Classifier(variant, graph_dim, hidden, std::move(vocab),
                      std::move(params));
}

void assemble_inputs(const Classifier& model,
                     const std::vector<corpus::Document>& docs,
                     const feat::FeatureTable* features, num::Matrix* bow,
                     num::Matrix* cg) {
    int n = static_cast<int>(docs.size());
    if (model.uses_graph() && !features)
        throw ConfigError(std::string(to_string(model.variant())) +
                          " needs graph features");
    if (features && features->dim() != model.graph_dim())
        throw ShapeError("graph feature width does not match the model");

    *bow = num::Matrix(n, model.bow_dim());
    *cg = num::Matrix(n, model.graph_dim());
    for (int i = 0; i < n; ++i) {
        auto v = corpus::featurize(docs[i], model.vocab());
        for (int k = 0; k < model.bow_dim(); ++k) (*bow)(i, k) = v[k];
        if (model.uses_graph()) {
            const auto* f = features->find(docs[i].id);
            if (!f)
                throw ConfigError("no graph feature for document " +
                                  docs[i].id);
            for (int k = 0; k < model.graph_dim(); ++k)
                (*cg)(i, k) = f->vec[k];
        }
    }
}

namespace {

num::Var hidden_layer(num::Tape& tape, const Classifier& model, num::Var x,
                      const char* w, const char* b) {
    const auto& store = model.params();
    return tape.relu(tape.add_rowvec(
        tape.matmul_nt(x, tape.param(store, model.idx(w))),
        tape.param(store, model.idx(b))));
}

}  // namespace

num::Matrix class_logits(const Classifier& model, const num::Matrix& x_bow,
                         const num::Matrix& x_cg) {
    num::Tape tape(num::Tape::Mode::eval);
    auto xb = tape.input(x_bow);
    auto z = hidden_layer(tape, model, xb, "m.w", "m.b");
    if (model.classifier_sees_graph()) {
        auto zg = hidden_layer(tape, model, tape.input(x_cg), "g.w", "g.b");
        z = tape.concat_cols(z, zg);
    }
    const auto& store = model.params();
    auto logits = tape.add_rowvec(
        tape.matmul_nt(z, tape.param(store, model.idx("c.w"))),
        tape.param(store, model.idx("c.b")));
    return tape.value(logits);
}

num::Matrix domain_logits(const Classifier& model, const num::Matrix& x_bow,
                          const num::Matrix& x_cg) {
    num::Tape tape(num::Tape::Mode::eval);
    auto xb = tape.input(x_bow);
    auto z = hidden_layer(tape, model, xb, "m.w", "m.b");
    if (model.discriminator_sees_graph()) {
        auto zg = hidden_layer(tape, model, tape.input(x_cg), "g.w", "g.b");
        z = tape.concat_cols(z, zg);
    }
    auto h = hidden_layer(tape, model, z, "d.w1", "d.b1");
    const auto& store = model.params();
    auto logits = tape.add_rowvec(
        tape.matmul_nt(h, tape.param(store, model.idx("d.w2"))),
        tape.param(store, model.idx("d.b2")));
    return tape.value(logits);
}

}  // namespace kgda::adv
