#include "kgda/num/tape.hpp"

#include <cmath>
#include <string>

#include "kgda/num/kernels.hpp"

namespace kgda::num {

namespace {

constexpr double kLogEps = 1e-12;

const kernels::Ops& ops() { return kernels::active(); }

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

}  // namespace

double logistic(double x) {
    double s;
    if (x >= 0.0) {
        const double e = std::exp(-x);
        s = 1.0 / (1.0 + e);
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    // Keep the output strictly inside (0,1) so downstream logs stay finite.
    if (s < 1e-300) s = 1e-300;
    if (s > 1.0 - 1e-16) s = 1.0 - 1e-16;
    return s;
}

double softmax_cross_entropy_value(const Matrix& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows())
        throw ShapeError("softmax_ce: " + std::to_string(labels.size()) + " labels for " +
                         logits.shape_str());
    if (logits.rows() == 0) throw ShapeError("softmax_ce: empty batch");
    const int k = logits.cols();
    double total = 0.0;
    for (int i = 0; i < logits.rows(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= k)
            throw DomainError("softmax_ce: label " + std::to_string(y) + " outside [0," +
                              std::to_string(k) + ")");
        const double* x = logits.row(i);
        double mx = x[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, x[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(x[j] - mx);
        total += mx + std::log(sum) - x[y];
    }
    return total / logits.rows();
}

double binary_cross_entropy_value(const Matrix& probs, const Matrix& targets, double norm) {
    if (!probs.same_shape(targets))
        throw ShapeError("binary_ce: " + probs.shape_str() + " vs " + targets.shape_str());
    if (probs.size() == 0) throw ShapeError("binary_ce: empty input");
    if (norm < 0.0) norm = 1.0 / static_cast<double>(probs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double y = targets.data()[i];
        if (y != 0.0 && y != 1.0)
            throw DomainError("binary_ce: target " + std::to_string(y) + " is not 0 or 1");
        const double p = probs.data()[i];
        total -= y * std::log(std::max(p, kLogEps)) +
                 (1.0 - y) * std::log(std::max(1.0 - p, kLogEps));
    }
    return norm * total;
}

double mean_squared_error_value(const Matrix& pred, const Matrix& target, double norm) {
    if (!pred.same_shape(target))
        throw ShapeError("mse: " + pred.shape_str() + " vs " + target.shape_str());
    if (pred.rows() == 0) throw ShapeError("mse: empty input");
    if (norm < 0.0) norm = 1.0 / static_cast<double>(pred.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        total += d * d;
    }
    return norm * total;
}

Tape::Node& Tape::at(Var v) {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw ConfigError("Var does not belong to this tape");
    return nodes_[v.id];
}

const Tape::Node& Tape::at(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw ConfigError("Var does not belong to this tape");
    return nodes_[v.id];
}

Var Tape::push(Node n) {
    if (backward_done_) throw ConfigError("tape already ran backward");
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Matrix m) {
    Node n;
    n.op = Op::input;
    n.value = std::move(m);
    return push(std::move(n));
}

Var Tape::param(const ParamStore& store, int index) {
    if (index < 0 || index >= store.size()) throw ConfigError("param index out of range");
    if (store_ && store_ != &store) throw ConfigError("tape already bound to another ParamStore");
    store_ = &store;
    Node n;
    n.op = Op::param;
    n.ext = &store.value(index);
    n.param_index = index;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& va = val(a.id);
    const Matrix& vb = val(b.id);
    require(va.cols() == vb.rows(), "matmul: " + va.shape_str() + " x " + vb.shape_str());
    Node n;
    n.op = Op::matmul;
    n.a = a.id;
    n.b = b.id;
    n.value = Matrix(va.rows(), vb.cols());
    ops().mm_nn_acc(n.value.data(), va.data(), vb.data(), va.rows(), va.cols(), vb.cols());
    return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var w) {
    const Matrix& va = val(a.id);
    const Matrix& vw = val(w.id);
    require(va.cols() == vw.cols(), "matmul_nt: " + va.shape_str() + " x " + vw.shape_str() + "^T");
    Node n;
    n.op = Op::matmul_nt;
    n.a = a.id;
    n.b = w.id;
    n.value = Matrix(va.rows(), vw.rows());
    ops().mm_nt_acc(n.value.data(), va.data(), vw.data(), va.rows(), va.cols(), vw.rows());
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    const Matrix& va = val(a.id);
    const Matrix& vb = val(b.id);
    require(va.same_shape(vb), "add: " + va.shape_str() + " vs " + vb.shape_str());
    Node n;
    n.op = Op::add;
    n.a = a.id;
    n.b = b.id;
    n.value = Matrix(va.rows(), va.cols());
    ops().add(n.value.data(), va.data(), vb.data(), va.size());
    return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var bias) {
    const Matrix& va = val(a.id);
    const Matrix& vb = val(bias.id);
    require(vb.rows() == 1 && vb.cols() == va.cols(),
            "add_rowvec: " + va.shape_str() + " + " + vb.shape_str());
    Node n;
    n.op = Op::add_rowvec;
    n.a = a.id;
    n.b = bias.id;
    n.value = Matrix(va.rows(), va.cols());
    for (int i = 0; i < va.rows(); ++i)
        ops().add(n.value.row(i), va.row(i), vb.data(), static_cast<std::size_t>(va.cols()));
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    const Matrix& va = val(a.id);
    const Matrix& vb = val(b.id);
    require(va.same_shape(vb), "sub: " + va.shape_str() + " vs " + vb.shape_str());
    Node n;
    n.op = Op::sub;
    n.a = a.id;
    n.b = b.id;
    n.value = Matrix(va.rows(), va.cols());
    ops().sub(n.value.data(), va.data(), vb.data(), va.size());
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
    const Matrix& va = val(a.id);
    const Matrix& vb = val(b.id);
    require(va.same_shape(vb), "hadamard: " + va.shape_str() + " vs " + vb.shape_str());
    Node n;
    n.op = Op::hadamard;
    n.a = a.id;
    n.b = b.id;
    n.value = Matrix(va.rows(), va.cols());
    ops().mul(n.value.data(), va.data(), vb.data(), va.size());
    return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::scale;
    n.a = a.id;
    n.c0 = c;
    n.value = Matrix(va.rows(), va.cols());
    ops().scale(n.value.data(), va.data(), c, va.size());
    return push(std::move(n));
}

Var Tape::relu(Var a) {
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::relu;
    n.a = a.id;
    n.value = Matrix(va.rows(), va.cols());
    ops().relu(n.value.data(), va.data(), va.size());
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::sigmoid;
    n.a = a.id;
    n.value = Matrix(va.rows(), va.cols());
    for (std::size_t i = 0; i < va.size(); ++i) n.value.data()[i] = logistic(va.data()[i]);
    return push(std::move(n));
}

Var Tape::dropout(Var a, double p, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0))
        throw ConfigError("dropout rate " + std::to_string(p) + " outside [0,1)");
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::dropout;
    n.a = a.id;
    if (mode_ == Mode::eval || p == 0.0) {
        n.value = va;  // identity; empty mask marks the pass-through case
        return push(std::move(n));
    }
    const double keep_scale = 1.0 / (1.0 - p);
    n.aux = Matrix(va.rows(), va.cols());
    for (std::size_t i = 0; i < va.size(); ++i)
        n.aux.data()[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
    n.value = Matrix(va.rows(), va.cols());
    ops().mul(n.value.data(), va.data(), n.aux.data(), va.size());
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const Matrix& va = val(a.id);
    const Matrix& vb = val(b.id);
    require(va.rows() == vb.rows(), "concat_cols: " + va.shape_str() + " | " + vb.shape_str());
    Node n;
    n.op = Op::concat_cols;
    n.a = a.id;
    n.b = b.id;
    n.value = Matrix(va.rows(), va.cols() + vb.cols());
    for (int i = 0; i < va.rows(); ++i) {
        double* out = n.value.row(i);
        std::copy(va.row(i), va.row(i) + va.cols(), out);
        std::copy(vb.row(i), vb.row(i) + vb.cols(), out + va.cols());
    }
    return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<int> rows) {
    const Matrix& va = val(a.id);
    for (int r : rows)
        require(r >= 0 && r < va.rows(),
                "gather_rows: row " + std::to_string(r) + " outside " + va.shape_str());
    Node n;
    n.op = Op::gather_rows;
    n.a = a.id;
    n.value = Matrix(static_cast<int>(rows.size()), va.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        std::copy(va.row(rows[k]), va.row(rows[k]) + va.cols(), n.value.row(static_cast<int>(k)));
    n.idx = std::move(rows);
    return push(std::move(n));
}

Var Tape::aggregate(Var a, std::shared_ptr<const AggPlan> plan, int out_rows) {
    const Matrix& va = val(a.id);
    require(out_rows >= 0, "aggregate: negative out_rows");
    if (plan) {
        for (const AggEdge& e : *plan) {
            require(e.dst >= 0 && e.dst < out_rows, "aggregate: dst out of range");
            require(e.src >= 0 && e.src < va.rows(), "aggregate: src out of range");
        }
    }
    Node n;
    n.op = Op::aggregate;
    n.a = a.id;
    n.value = Matrix(out_rows, va.cols());
    if (plan) {
        for (const AggEdge& e : *plan)
            ops().axpy(n.value.row(e.dst), e.coef, va.row(e.src),
                       static_cast<std::size_t>(va.cols()));
    }
    n.plan = std::move(plan);
    return push(std::move(n));
}

Var Tape::row_sum(Var a) {
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::row_sum;
    n.a = a.id;
    n.value = Matrix(va.rows(), 1);
    for (int i = 0; i < va.rows(); ++i) {
        double acc = 0.0;
        const double* r = va.row(i);
        for (int j = 0; j < va.cols(); ++j) acc += r[j];
        n.value(i, 0) = acc;
    }
    return push(std::move(n));
}

Var Tape::sum_all(Var a) {
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::sum_all;
    n.a = a.id;
    n.value = Matrix(1, 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) acc += va.data()[i];
    n.value(0, 0) = acc;
    return push(std::move(n));
}

Var Tape::mean_all(Var a) {
    const Matrix& va = val(a.id);
    require(va.size() > 0, "mean_all: empty input");
    return scale(sum_all(a), 1.0 / static_cast<double>(va.size()));
}

Var Tape::reverse(Var a, double mult) {
    const Matrix& va = val(a.id);
    Node n;
    n.op = Op::reverse;
    n.a = a.id;
    n.mult_a = mult;
    n.value = va;
    return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
    const Matrix& vl = val(logits.id);
    Node n;
    n.op = Op::softmax_ce;
    n.a = logits.id;
    n.value = Matrix(1, 1);
    n.value(0, 0) = softmax_cross_entropy_value(vl, labels);  // validates shapes and labels
    n.idx.assign(labels.begin(), labels.end());
    // Cache softmax probabilities for backward.
    n.aux = Matrix(vl.rows(), vl.cols());
    for (int i = 0; i < vl.rows(); ++i) {
        const double* x = vl.row(i);
        double mx = x[0];
        for (int j = 1; j < vl.cols(); ++j) mx = std::max(mx, x[j]);
        double sum = 0.0;
        for (int j = 0; j < vl.cols(); ++j) {
            n.aux(i, j) = std::exp(x[j] - mx);
            sum += n.aux(i, j);
        }
        for (int j = 0; j < vl.cols(); ++j) n.aux(i, j) /= sum;
    }
    return push(std::move(n));
}

Var Tape::binary_cross_entropy(Var probs, Matrix targets, double norm) {
    const Matrix& vp = val(probs.id);
    if (norm < 0.0) norm = vp.size() ? 1.0 / static_cast<double>(vp.size()) : 0.0;
    Node n;
    n.op = Op::binary_ce;
    n.a = probs.id;
    n.c0 = norm;
    n.value = Matrix(1, 1);
    n.value(0, 0) = binary_cross_entropy_value(vp, targets, norm);
    n.aux = std::move(targets);
    return push(std::move(n));
}

Var Tape::mean_squared_error(Var pred, Matrix target, double norm) {
    const Matrix& vp = val(pred.id);
    if (norm < 0.0) norm = vp.rows() ? 1.0 / static_cast<double>(vp.rows()) : 0.0;
    Node n;
    n.op = Op::mse;
    n.a = pred.id;
    n.c0 = norm;
    n.value = Matrix(1, 1);
    n.value(0, 0) = mean_squared_error_value(vp, target, norm);
    n.aux = std::move(target);
    return push(std::move(n));
}

const Matrix& Tape::value(Var v) const {
    const Node& n = at(v);
    return n.ext ? *n.ext : n.value;
}

double Tape::scalar_value(Var v) const {
    const Matrix& m = value(v);
    require(m.rows() == 1 && m.cols() == 1, "scalar_value on " + m.shape_str());
    return m(0, 0);
}

Matrix& Tape::grad_of(int id) {
    Matrix& g = grads_[id];
    if (g.empty()) {
        const Matrix& v = val(id);
        g = Matrix(v.rows(), v.cols());
    }
    return g;
}

namespace {

// All backward rules are linear in the incoming gradient, so an edge
// multiplier is applied by scaling the gradient seen through that edge.
const Matrix& edge_grad(const Matrix& g, double mult, Matrix& scratch) {
    if (mult == 1.0) return g;
    scratch = Matrix(g.rows(), g.cols());
    ops().scale(scratch.data(), g.data(), mult, g.size());
    return scratch;
}

}  // namespace

void Tape::backward_node(int id) {
    const Node& n = nodes_[id];
    const Matrix& g = grads_[id];
    Matrix scratch_a, scratch_b;

    switch (n.op) {
        case Op::input:
        case Op::param:
            return;

        case Op::matmul: {
            const Matrix& ga = edge_grad(g, n.mult_a, scratch_a);
            const Matrix& gb = edge_grad(g, n.mult_b, scratch_b);
            const Matrix& va = val(n.a);
            const Matrix& vb = val(n.b);
            // dA += G * B^T ; dB += A^T * G
            ops().mm_nt_acc(grad_of(n.a).data(), ga.data(), vb.data(), va.rows(), vb.cols(),
                            va.cols());
            ops().mm_tn_acc(grad_of(n.b).data(), va.data(), gb.data(), va.cols(), va.rows(),
                            vb.cols());
            return;
        }

        case Op::matmul_nt: {
            const Matrix& ga = edge_grad(g, n.mult_a, scratch_a);
            const Matrix& gw = edge_grad(g, n.mult_b, scratch_b);
            const Matrix& va = val(n.a);
            const Matrix& vw = val(n.b);
            // out = A * W^T ; dA += G * W ; dW += G^T * A
            ops().mm_nn_acc(grad_of(n.a).data(), ga.data(), vw.data(), va.rows(), vw.rows(),
                            vw.cols());
            ops().mm_tn_acc(grad_of(n.b).data(), gw.data(), va.data(), vw.rows(), va.rows(),
                            va.cols());
            return;
        }

        case Op::add: {
            ops().axpy(grad_of(n.a).data(), n.mult_a, g.data(), g.size());
            ops().axpy(grad_of(n.b).data(), n.mult_b, g.data(), g.size());
            return;
        }

        case Op::add_rowvec: {
            ops().axpy(grad_of(n.a).data(), n.mult_a, g.data(), g.size());
            Matrix& gb = grad_of(n.b);
            for (int i = 0; i < g.rows(); ++i)
                ops().axpy(gb.data(), n.mult_b, g.row(i), static_cast<std::size_t>(g.cols()));
            return;
        }

        case Op::sub: {
            ops().axpy(grad_of(n.a).data(), n.mult_a, g.data(), g.size());
            ops().axpy(grad_of(n.b).data(), -n.mult_b, g.data(), g.size());
            return;
        }

        case Op::hadamard: {
            const Matrix& ga = edge_grad(g, n.mult_a, scratch_a);
            const Matrix& gb = edge_grad(g, n.mult_b, scratch_b);
            ops().mul_acc(grad_of(n.a).data(), ga.data(), val(n.b).data(), g.size());
            ops().mul_acc(grad_of(n.b).data(), gb.data(), val(n.a).data(), g.size());
            return;
        }

        case Op::scale: {
            ops().axpy(grad_of(n.a).data(), n.mult_a * n.c0, g.data(), g.size());
            return;
        }

        case Op::relu: {
            const Matrix& ga = edge_grad(g, n.mult_a, scratch_a);
            ops().relu_bwd_acc(grad_of(n.a).data(), ga.data(), val(n.a).data(), g.size());
            return;
        }

        case Op::sigmoid: {
            Matrix& ga = grad_of(n.a);
            const double* s = n.value.data();
            for (std::size_t i = 0; i < g.size(); ++i)
                ga.data()[i] += n.mult_a * g.data()[i] * s[i] * (1.0 - s[i]);
            return;
        }

        case Op::dropout: {
            if (n.aux.empty()) {
                ops().axpy(grad_of(n.a).data(), n.mult_a, g.data(), g.size());
            } else {
                const Matrix& ga = edge_grad(g, n.mult_a, scratch_a);
                ops().mul_acc(grad_of(n.a).data(), ga.data(), n.aux.data(), g.size());
            }
            return;
        }

        case Op::concat_cols: {
            Matrix& ga = grad_of(n.a);
            Matrix& gb = grad_of(n.b);
            const int ca = ga.cols();
            const int cb = gb.cols();
            for (int i = 0; i < g.rows(); ++i) {
                ops().axpy(ga.row(i), n.mult_a, g.row(i), static_cast<std::size_t>(ca));
                ops().axpy(gb.row(i), n.mult_b, g.row(i) + ca, static_cast<std::size_t>(cb));
            }
            return;
        }

        case Op::gather_rows: {
            Matrix& ga = grad_of(n.a);
            for (std::size_t k = 0; k < n.idx.size(); ++k)
                ops().axpy(ga.row(n.idx[k]), n.mult_a, g.row(static_cast<int>(k)),
                           static_cast<std::size_t>(g.cols()));
            return;
        }

        case Op::aggregate: {
            Matrix& ga = grad_of(n.a);
            if (n.plan) {
                for (const AggEdge& e : *n.plan)
                    ops().axpy(ga.row(e.src), n.mult_a * e.coef, g.row(e.dst),
                               static_cast<std::size_t>(g.cols()));
            }
            return;
        }

        case Op::row_sum: {
            Matrix& ga = grad_of(n.a);
            for (int i = 0; i < ga.rows(); ++i) {
                const double gi = n.mult_a * g(i, 0);
                double* r = ga.row(i);
                for (int j = 0; j < ga.cols(); ++j) r[j] += gi;
            }
            return;
        }

        case Op::sum_all: {
            Matrix& ga = grad_of(n.a);
            const double g0 = n.mult_a * g(0, 0);
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g0;
            return;
        }

        case Op::reverse: {
            ops().axpy(grad_of(n.a).data(), n.mult_a, g.data(), g.size());
            return;
        }

        case Op::softmax_ce: {
            Matrix& ga = grad_of(n.a);
            const double g0 = n.mult_a * g(0, 0) / static_cast<double>(n.aux.rows());
            for (int i = 0; i < n.aux.rows(); ++i) {
                const double* p = n.aux.row(i);
                double* r = ga.row(i);
                for (int j = 0; j < n.aux.cols(); ++j)
                    r[j] += g0 * (p[j] - (j == n.idx[i] ? 1.0 : 0.0));
            }
            return;
        }

        case Op::binary_ce: {
            Matrix& ga = grad_of(n.a);
            const Matrix& vp = val(n.a);
            const double g0 = n.mult_a * g(0, 0) * n.c0;
            for (std::size_t i = 0; i < vp.size(); ++i) {
                const double y = n.aux.data()[i];
                const double pc = std::max(vp.data()[i], kLogEps);
                const double qc = std::max(1.0 - vp.data()[i], kLogEps);
                ga.data()[i] += g0 * ((1.0 - y) / qc - y / pc);
            }
            return;
        }

        case Op::mse: {
            Matrix& ga = grad_of(n.a);
            const Matrix& vp = val(n.a);
            const double g0 = n.mult_a * g(0, 0) * 2.0 * n.c0;
            for (std::size_t i = 0; i < vp.size(); ++i)
                ga.data()[i] += g0 * (vp.data()[i] - n.aux.data()[i]);
            return;
        }
    }
}

void Tape::backward(Var loss) {
    const Matrix& lv = value(loss);
    require(lv.rows() == 1 && lv.cols() == 1, "backward on non-scalar " + lv.shape_str());
    if (backward_done_) throw ConfigError("backward already ran on this tape");
    backward_done_ = true;
    grads_.assign(nodes_.size(), Matrix());
    grads_[loss.id] = Matrix::constant(1, 1, 1.0);
    for (int id = loss.id; id >= 0; --id) {
        if (grads_[id].empty()) continue;  // node does not reach the loss
        backward_node(id);
    }
}

Matrix Tape::node_grad(Var v) const {
    const Node& n = at(v);
    if (!backward_done_) throw ConfigError("node_grad before backward");
    const Matrix& g = grads_[v.id];
    if (g.empty()) {
        const Matrix& val_m = n.ext ? *n.ext : n.value;
        return Matrix(val_m.rows(), val_m.cols());
    }
    return g;
}

Matrix Tape::param_grad(const ParamStore& store, int index) const {
    check_same_store(store);
    if (!backward_done_) throw ConfigError("param_grad before backward");
    if (index < 0 || index >= store.size()) throw ConfigError("param index out of range");
    const Matrix& v = store.value(index);
    Matrix out(v.rows(), v.cols());
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        if (n.op == Op::param && n.param_index == index && !grads_[id].empty())
            ops().axpy(out.data(), 1.0, grads_[id].data(), out.size());
    }
    return out;
}

std::vector<Matrix> Tape::param_grads(const ParamStore& store) const {
    std::vector<Matrix> out;
    out.reserve(store.size());
    for (int i = 0; i < store.size(); ++i) out.push_back(param_grad(store, i));
    return out;
}

void Tape::check_same_store(const ParamStore& store) const {
    if (store_ && store_ != &store) throw ConfigError("tape is bound to a different ParamStore");
}

}  // namespace kgda::num
