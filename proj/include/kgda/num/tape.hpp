#pragma once

#include <memory>
#include <vector>

#include "kgda/num/matrix.hpp"
#include "kgda/num/params.hpp"
#include "kgda/num/rng.hpp"

namespace kgda::num {

// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// One term of a sparse weighted row-gather: out[dst] += coef * in[src].
struct AggEdge {
    int dst;
    int src;
    double coef;
};
using AggPlan = std::vector<AggEdge>;

double logistic(double x);

// Standalone loss evaluation (same math the tape ops use).
double softmax_cross_entropy_value(const Matrix& logits, const std::vector<int>& labels);
double binary_cross_entropy_value(const Matrix& probs, const Matrix& targets, double norm = -1.0);
double mean_squared_error_value(const Matrix& pred, const Matrix& target, double norm = -1.0);

// Reverse-mode tape. Values are computed eagerly on op creation; backward()
// walks the recording once and accumulates gradients. Every recorded edge
// carries a scalar multiplier (1.0 normally); reverse() is an identity op
// whose edge multiplier flips the sign of exactly that edge's gradient
// contribution, which is how gradient reversal is expressed.
class Tape {
  public:
    enum class Mode { train, eval };

    explicit Tape(Mode mode = Mode::train) : mode_(mode) {}

    Mode mode() const { return mode_; }

    Var input(Matrix m);
    // References the store's matrix (no copy); the store must stay alive and
    // unmodified until backward() finishes. One store per tape.
    Var param(const ParamStore& store, int index);

    Var matmul(Var a, Var b);     // [m,k] x [k,n]
    Var matmul_nt(Var a, Var w);  // [m,k] x [n,k]^T -> [m,n]
    Var add(Var a, Var b);
    Var add_rowvec(Var a, Var bias);  // bias [1,n] broadcast over rows
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var sigmoid(Var a);
    // Inverted dropout: keep with probability 1-p, scale kept entries by
    // 1/(1-p). Identity in eval mode. Mask order is row-major draw order.
    Var dropout(Var a, double p, Rng& rng);
    Var concat_cols(Var a, Var b);
    Var gather_rows(Var a, std::vector<int> rows);
    Var aggregate(Var a, std::shared_ptr<const AggPlan> plan, int out_rows);
    Var row_sum(Var a);  // [m,n] -> [m,1]
    Var sum_all(Var a);  // [m,n] -> [1,1]
    Var mean_all(Var a);
    // Identity with gradient scaled by mult (-1 for plain reversal,
    // -lambda for scheduled reversal).
    Var reverse(Var a, double mult);

    // Mean over rows of the per-row cross entropy; labels are class indices.
    Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);
    // Probabilities vs {0,1} targets; norm < 0 means 1/element-count.
    Var binary_cross_entropy(Var probs, Matrix targets, double norm = -1.0);
    // norm < 0 means 1/rows: mean over rows of the squared row distance.
    Var mean_squared_error(Var pred, Matrix target, double norm = -1.0);

    const Matrix& value(Var v) const;
    double scalar_value(Var v) const;

    // Loss must be 1x1. May be called once per tape.
    void backward(Var loss);

    bool backward_done() const { return backward_done_; }
    // Gradient at any node (zeros if the node does not reach the loss).
    Matrix node_grad(Var v) const;
    // Gradient for one parameter, accumulated over every use on this tape.
    Matrix param_grad(const ParamStore& store, int index) const;
    // All parameter gradients, index-aligned with the store.
    std::vector<Matrix> param_grads(const ParamStore& store) const;

    int node_count() const { return static_cast<int>(nodes_.size()); }

  private:
    enum class Op {
        input,
        param,
        matmul,
        matmul_nt,
        add,
        add_rowvec,
        sub,
        hadamard,
        scale,
        relu,
        sigmoid,
        dropout,
        concat_cols,
        gather_rows,
        aggregate,
        row_sum,
        sum_all,
        reverse,
        softmax_ce,
        binary_ce,
        mse,
    };

    struct Node {
        Op op;
        Matrix value;               // owned result (unused for param nodes)
        const Matrix* ext = nullptr;  // param nodes: points into the store
        int a = -1, b = -1;
        double mult_a = 1.0, mult_b = 1.0;
        double c0 = 0.0;  // scale factor or loss normalizer
        int param_index = -1;
        std::vector<int> idx;  // gather indices or class labels
        Matrix aux;            // dropout mask, softmax probs, loss targets
        std::shared_ptr<const AggPlan> plan;
    };

    const Matrix& val(int id) const {
        const Node& n = nodes_[id];
        return n.ext ? *n.ext : n.value;
    }

    Node& at(Var v);
    const Node& at(Var v) const;
    Var push(Node n);
    Matrix& grad_of(int id);
    void check_same_store(const ParamStore& store) const;
    void backward_node(int id);

    Mode mode_;
    std::vector<Node> nodes_;
    std::vector<Matrix> grads_;
    const ParamStore* store_ = nullptr;
    bool backward_done_ = false;
};

}  // namespace kgda::num
