#include "kgda/rgcn/model.hpp"

#include <memory>
#include <utility>

#include "kgda/errors.hpp"
#include "kgda/util/binio.hpp"

namespace kgda::rgcn {

namespace {

constexpr std::uint32_t kMagic = 0x4B474145;  // "KGAE"
constexpr std::uint32_t kVersion = 1;

void check_positive_dims(const Dims& d) {
    if (d.d0 <= 0 || d.d1 <= 0 || d.d <= 0)
        throw ConfigError("embedding dims must be positive");
}

}  // namespace

Autoencoder::Autoencoder(std::vector<std::string> node_names,
                         std::vector<std::string> relation_names, Dims dims,
                         bool freeze_node_init, num::Rng& init_rng)
    : dims_(dims),
      freeze_node_init_(freeze_node_init),
      node_names_(std::move(node_names)),
      relation_names_(std::move(relation_names)) {
    check_positive_dims(dims_);
    if (node_names_.empty()) throw ConfigError("model needs at least one node");
    int n = static_cast<int>(node_names_.size());
    int nr = static_cast<int>(relation_names_.size());

    double a0 = std::sqrt(6.0 / dims_.d0);
    params_.add("node_init", num::uniform_init(n, dims_.d0, a0, init_rng));
    params_.add("enc1.self", num::glorot_init(dims_.d1, dims_.d0, init_rng));
    for (int r = 0; r < nr; ++r) {
        params_.add("enc1.rel" + std::to_string(r),
                    num::glorot_init(dims_.d1, dims_.d0, init_rng));
        params_.add("enc1.rel" + std::to_string(r) + ".inv",
                    num::glorot_init(dims_.d1, dims_.d0, init_rng));
    }
    params_.add("enc2.self", num::glorot_init(dims_.d, dims_.d1, init_rng));
    for (int r = 0; r < nr; ++r) {
        params_.add("enc2.rel" + std::to_string(r),
                    num::glorot_init(dims_.d, dims_.d1, init_rng));
        params_.add("enc2.rel" + std::to_string(r) + ".inv",
                    num::glorot_init(dims_.d, dims_.d1, init_rng));
    }
    params_.add("dec", num::glorot_init(std::max(nr, 1), dims_.d, init_rng));
    index_params();
}

Autoencoder::Autoencoder(std::vector<std::string> node_names,
                         std::vector<std::string> relation_names, Dims dims,
                         bool freeze_node_init, num::ParamStore params)
    : dims_(dims),
      freeze_node_init_(freeze_node_init),
      node_names_(std::move(node_names)),
      relation_names_(std::move(relation_names)),
      params_(std::move(params)) {
    check_positive_dims(dims_);
    index_params();
}

void Autoencoder::index_params() {
    for (int i = 0; i < node_count(); ++i) node_rows_[node_names_[i]] = i;
    for (int r = 0; r < relation_count(); ++r)
        relation_idx_[relation_names_[r]] = r;

    auto require = [&](const std::string& name, int rows, int cols) {
        int idx = params_.index_of(name);
        if (idx < 0) throw ParseError("checkpoint missing parameter: " + name);
        const auto& v = params_.value(idx);
        if (v.rows() != rows || v.cols() != cols)
            throw ParseError("checkpoint parameter " + name +
                             " has wrong shape");
        return idx;
    };
    idx_node_init_ = require("node_init", node_count(), dims_.d0);
    idx_self1_ = require("enc1.self", dims_.d1, dims_.d0);
    idx_self2_ = require("enc2.self", dims_.d, dims_.d1);
    idx_rel1_.clear();
    idx_rel2_.clear();
    for (int r = 0; r < relation_count(); ++r) {
        auto tag = "rel" + std::to_string(r);
        idx_rel1_.push_back(require("enc1." + tag, dims_.d1, dims_.d0));
        idx_rel1_.push_back(require("enc1." + tag + ".inv", dims_.d1, dims_.d0));
        idx_rel2_.push_back(require("enc2." + tag, dims_.d, dims_.d1));
        idx_rel2_.push_back(require("enc2." + tag + ".inv", dims_.d, dims_.d1));
    }
    idx_dec_ = require("dec", std::max(relation_count(), 1), dims_.d);
}

Autoencoder Autoencoder::from_graph(const kg::MultiRelGraph& g, Dims dims,
                                    bool freeze_node_init,
                                    num::Rng& init_rng) {
    return Autoencoder(g.node_names(), g.relation_names(), dims,
                       freeze_node_init, init_rng);
}

int Autoencoder::node_row(const std::string& name) const {
    auto it = node_rows_.find(name);
    return it == node_rows_.end() ? -1 : it->second;
}

int Autoencoder::relation_index(const std::string& name) const {
    auto it = relation_idx_.find(name);
    return it == relation_idx_.end() ? -1 : it->second;
}

int Autoencoder::idx_self(int layer) const {
    if (layer == 1) return idx_self1_;
    if (layer == 2) return idx_self2_;
    throw ConfigError("layer must be 1 or 2");
}

int Autoencoder::idx_rel(int layer, int slot) const {
    const auto& v = layer == 1 ? idx_rel1_ : idx_rel2_;
    if (layer != 1 && layer != 2) throw ConfigError("layer must be 1 or 2");
    return v.at(slot);
}

void Autoencoder::save(const std::string& path) const {
    util::BinWriter w(path);
    w.u32(kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(dims_.d0));
    w.u32(static_cast<std::uint32_t>(dims_.d1));
    w.u32(static_cast<std::uint32_t>(dims_.d));
    w.u32(freeze_node_init_ ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(node_names_.size()));
    for (const auto& n : node_names_) w.str(n);
    w.u32(static_cast<std::uint32_t>(relation_names_.size()));
    for (const auto& r : relation_names_) w.str(r);
    params_.serialize(w);
    w.u64(params_.checksum());
    w.commit();
}

Autoencoder Autoencoder::load(const std::string& path) {
    util::BinReader r(path);
    if (r.u32() != kMagic) throw ParseError("not a model checkpoint: " + path);
    if (r.u32() != kVersion)
        throw ParseError("unsupported checkpoint version in " + path);
    Dims dims;
    dims.d0 = static_cast<int>(r.u32());
    dims.d1 = static_cast<int>(r.u32());
    dims.d = static_cast<int>(r.u32());
    bool freeze = r.u32() != 0;
    std::vector<std::string> nodes(r.u32());
    for (auto& n : nodes) n = r.str();
    std::vector<std::string> rels(r.u32());
    for (auto& rel : rels) rel = r.str();
    auto params = num::ParamStore::deserialize(r);
    std::uint64_t sum = r.u64();
    if (sum != params.checksum())
        throw ParseError("checkpoint checksum mismatch in " + path);
    return Autoencoder(std::move(nodes), std::move(rels), dims, freeze,
                       std::move(params));
}

num::Var build_encode(num::Tape& tape, const Autoencoder& model,
                      const std::vector<int>& rows,
                      const std::vector<kg::Triplet>& edges) {
    // Active set: requested rows first, then any other edge endpoint; layer-1
    // values of neighbors feed layer 2, so endpoints must be computed too.
    std::vector<int> active;
    std::unordered_map<int, int> pos;
    auto touch = [&](int id) {
        if (id < 0 || id >= model.node_count())
            throw ConfigError("node id outside the model");
        auto [it, fresh] = pos.emplace(id, static_cast<int>(active.size()));
        if (fresh) active.push_back(id);
        return it->second;
    };
    for (int id : rows) touch(id);
    for (const auto& e : edges) {
        touch(e.head);
        touch(e.tail);
    }

    int n = static_cast<int>(active.size());
    int slots = 2 * model.relation_count();
    std::vector<num::AggPlan> plans(slots);
    {
        std::vector<std::unordered_map<int, int>> deg(slots);
        for (const auto& e : edges) {
            if (e.rel < 0 || e.rel >= model.relation_count())
                throw ConfigError("relation id outside the model");
            ++deg[2 * e.rel][pos.at(e.tail)];
            ++deg[2 * e.rel + 1][pos.at(e.head)];
        }
        for (const auto& e : edges) {
            int h = pos.at(e.head), t = pos.at(e.tail);
            plans[2 * e.rel].push_back(
                {t, h, 1.0 / deg[2 * e.rel].at(t)});
            plans[2 * e.rel + 1].push_back(
                {h, t, 1.0 / deg[2 * e.rel + 1].at(h)});
        }
    }

    const auto& store = model.params();
    auto x0 = tape.gather_rows(tape.param(store, model.idx_node_init()), active);
    auto propagate = [&](num::Var x, int layer) {
        auto acc = tape.matmul_nt(x, tape.param(store, model.idx_self(layer)));
        for (int s = 0; s < slots; ++s) {
            if (plans[s].empty()) continue;
            auto plan = std::make_shared<const num::AggPlan>(plans[s]);
            auto mixed = tape.aggregate(x, std::move(plan), n);
            acc = tape.add(
                acc, tape.matmul_nt(mixed,
                                    tape.param(store, model.idx_rel(layer, s))));
        }
        return acc;
    };
    auto h1 = tape.relu(propagate(x0, 1));
    auto h2 = propagate(h1, 2);

    if (n == static_cast<int>(rows.size())) return h2;
    std::vector<int> take;
    take.reserve(rows.size());
    for (int id : rows) take.push_back(pos.at(id));
    return tape.gather_rows(h2, std::move(take));
}

num::Matrix encode_rows(const Autoencoder& model, const std::vector<int>& rows,
                        const std::vector<kg::Triplet>& edges) {
    num::Tape tape(num::Tape::Mode::eval);
    return tape.value(build_encode(tape, model, rows, edges));
}

num::Matrix encode_nodes(const kg::MultiRelGraph& subgraph,
                         const Autoencoder& model) {
    std::vector<int> rows;
    rows.reserve(subgraph.node_count());
    for (const auto& name : subgraph.node_names()) {
        int row = model.node_row(name);
        if (row < 0)
            throw ConfigError("node without initialized feature: " + name);
        rows.push_back(row);
    }
    std::vector<kg::Triplet> edges;
    edges.reserve(subgraph.triplets().size());
    for (const auto& t : subgraph.triplets()) {
        int rel = model.relation_index(subgraph.relation_name(t.rel));
        if (rel < 0)
            throw ConfigError("unknown relation: " +
                              subgraph.relation_name(t.rel));
        edges.push_back({rows[t.head], rel, rows[t.tail]});
    }
    return encode_rows(model, rows, edges);
}

double distmult_score(const Autoencoder& model, std::span<const double> h,
                      int rel, std::span<const double> t) {
    if (rel < 0 || rel >= std::max(model.relation_count(), 1))
        throw ConfigError("relation id outside the model");
    int d = model.dims().d;
    if (static_cast<int>(h.size()) != d || static_cast<int>(t.size()) != d)
        throw ShapeError("embedding length mismatch");
    const auto& dec = model.params().value(model.idx_decoder());
    double s = 0.0;
    // (h*t)*diag keeps the score bitwise symmetric in h and t.
    for (int k = 0; k < d; ++k) s += h[k] * t[k] * dec(rel, k);
    return num::logistic(s);
}

}  // namespace kgda::rgcn
