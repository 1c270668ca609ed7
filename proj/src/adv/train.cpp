#include "kgda/adv/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kgda/errors.hpp"
#include "kgda/log.hpp"
#include "kgda/num/optim.hpp"

namespace kgda::adv {

double lambda_at(double p) {
    if (p < 0.0 || p > 1.0) {
        warn("schedule progress " + std::to_string(p) +
             " outside [0,1], clamping");
        p = std::clamp(p, 0.0, 1.0);
    }
    return 2.0 / (1.0 + std::exp(-10.0 * p)) - 1.0;
}

namespace {

num::Var hidden_path(num::Tape& tape, const Classifier& model, num::Var x,
                     const char* w, const char* b, double dropout_p,
                     num::Rng& rng) {
    const auto& store = model.params();
    auto h = tape.relu(tape.add_rowvec(
        tape.matmul_nt(x, tape.param(store, model.idx(w))),
        tape.param(store, model.idx(b))));
    return tape.dropout(h, dropout_p, rng);
}

num::Matrix rows_of(const num::Matrix& m, int begin, int end) {
    num::Matrix out(end - begin, m.cols());
    for (int i = begin; i < end; ++i)
        for (int j = 0; j < m.cols(); ++j) out(i - begin, j) = m(i, j);
    return out;
}

std::vector<int> iota_vec(int begin, int end) {
    std::vector<int> v(end - begin);
    std::iota(v.begin(), v.end(), begin);
    return v;
}

num::Var decode(num::Tape& tape, const Classifier& model, num::Var z,
                const char* w, const char* b) {
    const auto& store = model.params();
    return tape.add_rowvec(
        tape.matmul_nt(z, tape.param(store, model.idx(w))),
        tape.param(store, model.idx(b)));
}

}  // namespace

BatchLosses build_losses(num::Tape& tape, const Classifier& model,
                         const num::Matrix& x_bow, const num::Matrix& x_cg,
                         int src_rows, const std::vector<int>& src_labels,
                         double lambda, double gamma, double dropout_p,
                         num::Rng& dropout_rng, double reverse_mult) {
    int rows = x_bow.rows();
    if (src_rows < 1 || src_rows >= rows)
        throw ConfigError("batch needs at least one source and one target row");
    if (static_cast<int>(src_labels.size()) != src_rows)
        throw ShapeError("one label per source row required");
    if (x_cg.rows() != rows) throw ShapeError("bow and graph row counts differ");

    const auto& store = model.params();
    auto xb = tape.input(x_bow);
    auto z_dann = hidden_path(tape, model, xb, "m.w", "m.b", dropout_p,
                              dropout_rng);
    num::Var z_grp;
    if (model.uses_graph()) {
        auto xg = tape.input(x_cg);
        z_grp = hidden_path(tape, model, xg, "g.w", "g.b", dropout_p,
                            dropout_rng);
    }

    auto zc = model.classifier_sees_graph() ? tape.concat_cols(z_dann, z_grp)
                                            : z_dann;
    auto zc_src = tape.gather_rows(zc, iota_vec(0, src_rows));
    auto cls_logits = tape.add_rowvec(
        tape.matmul_nt(zc_src, tape.param(store, model.idx("c.w"))),
        tape.param(store, model.idx("c.b")));
    auto cls = tape.softmax_cross_entropy(cls_logits, src_labels);

    auto zd = model.discriminator_sees_graph() ? tape.concat_cols(z_dann, z_grp)
                                               : z_dann;
    auto rev = tape.reverse(zd, reverse_mult);
    auto h = hidden_path(tape, model, rev, "d.w1", "d.b1", dropout_p,
                         dropout_rng);
    auto dom_logits = tape.add_rowvec(
        tape.matmul_nt(h, tape.param(store, model.idx("d.w2"))),
        tape.param(store, model.idx("d.b2")));
    num::Matrix dom_targets(rows, 1);
    for (int i = 0; i < src_rows; ++i) dom_targets(i, 0) = 1.0;
    auto adv = tape.binary_cross_entropy(tape.sigmoid(dom_logits),
                                         std::move(dom_targets));

    num::Var recon;
    if (model.uses_graph()) {
        auto z_src = tape.gather_rows(z_grp, iota_vec(0, src_rows));
        auto z_tgt = tape.gather_rows(z_grp, iota_vec(src_rows, rows));
        const char* sw = model.per_domain_decoders() ? "r.src.w" : "r.w";
        const char* sb = model.per_domain_decoders() ? "r.src.b" : "r.b";
        const char* tw = model.per_domain_decoders() ? "r.tgt.w" : "r.w";
        const char* tb = model.per_domain_decoders() ? "r.tgt.b" : "r.b";
        auto mse_src = tape.mean_squared_error(
            decode(tape, model, z_src, sw, sb), rows_of(x_cg, 0, src_rows));
        auto mse_tgt = tape.mean_squared_error(
            decode(tape, model, z_tgt, tw, tb), rows_of(x_cg, src_rows, rows));
        recon = tape.add(mse_src, mse_tgt);
    } else {
        recon = tape.input(num::Matrix(1, 1));
    }

    auto total = tape.add(tape.add(cls, tape.scale(adv, lambda)),
                          tape.scale(recon, gamma));
    return BatchLosses{cls, adv, recon, total, cls_logits, dom_logits};
}

namespace {

struct Split {
    num::Matrix bow;
    num::Matrix cg;
    std::vector<int> labels;  // -1 where absent
};

Split assemble_split(const Classifier& model,
                     const std::vector<corpus::Document>& docs,
                     const feat::FeatureTable* features) {
    Split s;
    assemble_inputs(model, docs, features, &s.bow, &s.cg);
    s.labels.reserve(docs.size());
    for (const auto& d : docs)
        s.labels.push_back(d.label ? static_cast<int>(*d.label) : -1);
    return s;
}

double accuracy_of(const Classifier& model, const Split& s) {
    if (s.bow.rows() == 0) throw DomainError("no documents to score");
    auto logits = class_logits(model, s.bow, s.cg);
    int hits = 0;
    for (int i = 0; i < logits.rows(); ++i) {
        if (s.labels[i] < 0)
            throw DomainError("document without a label cannot be scored");
        int pred = logits(i, 1) > logits(i, 0) ? 1 : 0;
        if (pred == s.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / logits.rows();
}

double disc_accuracy_of(const Classifier& model, const Split& src,
                        const Split& tgt) {
    int total = src.bow.rows() + tgt.bow.rows();
    if (total == 0) throw ConfigError("no documents to score");
    int hits = 0;
    if (src.bow.rows() > 0) {
        auto ls = domain_logits(model, src.bow, src.cg);
        for (int i = 0; i < ls.rows(); ++i)
            if (ls(i, 0) >= 0.0) ++hits;
    }
    if (tgt.bow.rows() > 0) {
        auto lt = domain_logits(model, tgt.bow, tgt.cg);
        for (int i = 0; i < lt.rows(); ++i)
            if (lt(i, 0) < 0.0) ++hits;
    }
    return static_cast<double>(hits) / total;
}

// Copies count rows of m, chosen by order[begin..], into dst starting at
// dst_row.
void pick_rows(const num::Matrix& m, const std::vector<int>& order, int begin,
               int count, num::Matrix* dst, int dst_row) {
    for (int i = 0; i < count; ++i) {
        const double* r = m.row(order[begin + i]);
        std::copy(r, r + m.cols(), dst->row(dst_row + i));
    }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const TrainData& data) {
    if (data.src_train.empty() || data.src_test.empty() ||
        data.tgt_train.empty() || data.tgt_test.empty())
        throw ConfigError("all four document splits must be non-empty");
    for (const auto& d : data.src_train)
        if (!d.label)
            throw DomainError("unlabeled source training document " + d.id);
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (cfg.batch < 1) throw ConfigError("batch must be >= 1");

    std::vector<const corpus::Document*> fit_docs;
    for (const auto& d : data.src_train) fit_docs.push_back(&d);
    for (const auto& d : data.tgt_train) fit_docs.push_back(&d);
    auto vocab = corpus::fit_vocab(
        std::span<const corpus::Document* const>(fit_docs), cfg.bow_dim);

    num::Rng root(cfg.seed);
    auto init_rng = root.child(0);
    auto shuffle_src = root.child(1);
    auto shuffle_tgt = root.child(2);
    auto dropout_rng = root.child(3);

    int graph_dim = data.features ? data.features->dim() : 1;
    Classifier model(cfg.variant, graph_dim, cfg.hidden, std::move(vocab),
                     init_rng);

    Split src_train = assemble_split(model, data.src_train, data.features);
    Split src_test = assemble_split(model, data.src_test, data.features);
    Split tgt_train = assemble_split(model, data.tgt_train, data.features);
    Split tgt_test = assemble_split(model, data.tgt_test, data.features);

    int nsrc = src_train.bow.rows();
    int ntgt = tgt_train.bow.rows();
    int steps = std::max(1, std::min(nsrc, ntgt) / cfg.batch);
    long total_steps = static_cast<long>(steps) * cfg.epochs;

    num::Optimizer opt(cfg.sgd ? num::Optimizer::Kind::sgd
                               : num::Optimizer::Kind::adam,
                       model.params(), cfg.lr);

    TrainResult result{std::move(model), {}};
    Classifier& m = result.model;
    std::vector<int> src_order(nsrc), tgt_order(ntgt);
    std::iota(src_order.begin(), src_order.end(), 0);
    std::iota(tgt_order.begin(), tgt_order.end(), 0);

    long global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_src.shuffle(src_order);
        shuffle_tgt.shuffle(tgt_order);
        double sum_cls = 0.0, sum_adv = 0.0, sum_recon = 0.0;

        for (int s = 0; s < steps; ++s) {
            int bs_src = std::min(cfg.batch, nsrc - s * cfg.batch);
            int bs_tgt = std::min(cfg.batch, ntgt - s * cfg.batch);
            int rows = bs_src + bs_tgt;
            num::Matrix xb(rows, m.bow_dim()), xg(rows, m.graph_dim());
            pick_rows(src_train.bow, src_order, s * cfg.batch, bs_src, &xb, 0);
            pick_rows(tgt_train.bow, tgt_order, s * cfg.batch, bs_tgt, &xb,
                      bs_src);
            pick_rows(src_train.cg, src_order, s * cfg.batch, bs_src, &xg, 0);
            pick_rows(tgt_train.cg, tgt_order, s * cfg.batch, bs_tgt, &xg,
                      bs_src);
            std::vector<int> labels(bs_src);
            for (int i = 0; i < bs_src; ++i)
                labels[i] = src_train.labels[src_order[s * cfg.batch + i]];

            double p;
            if (cfg.lambda_restart_each_epoch)
                p = static_cast<double>(s) / std::max(1, steps - 1);
            else
                p = static_cast<double>(global_step) /
                    std::max(1L, total_steps - 1);
            double lambda = lambda_at(p);

            num::Tape tape(num::Tape::Mode::train);
            auto losses = build_losses(tape, m, xb, xg, bs_src, labels, lambda,
                                       cfg.gamma, cfg.dropout, dropout_rng,
                                       -1.0);
            double total = tape.scalar_value(losses.total);
            if (!std::isfinite(total))
                throw TrainingError("loss diverged at epoch " +
                                    std::to_string(epoch + 1));
            tape.backward(losses.total);
            auto grads = tape.param_grads(m.params());
            opt.step(m.params(), grads);

            sum_cls += tape.scalar_value(losses.cls);
            sum_adv += tape.scalar_value(losses.adv);
            sum_recon += tape.scalar_value(losses.recon);
            ++global_step;
        }

        EpochMetrics em;
        em.loss_cls = sum_cls / steps;
        em.loss_adv = sum_adv / steps;
        em.loss_recon = sum_recon / steps;
        em.source_train_acc = accuracy_of(m, src_train);
        em.target_test_acc = accuracy_of(m, tgt_test);
        em.disc_acc = disc_accuracy_of(m, src_test, tgt_test);
        result.metrics.push_back(em);
    }
    return result;
}

double evaluate(const Classifier& model,
                const std::vector<corpus::Document>& docs,
                const feat::FeatureTable* features) {
    Split s = assemble_split(model, docs, features);
    return accuracy_of(model, s);
}

double discriminator_accuracy(const Classifier& model,
                              const std::vector<corpus::Document>& src_docs,
                              const std::vector<corpus::Document>& tgt_docs,
                              const feat::FeatureTable* features) {
    Split src = assemble_split(model, src_docs, features);
    Split tgt = assemble_split(model, tgt_docs, features);
    return disc_accuracy_of(model, src, tgt);
}

}  // namespace kgda::adv
