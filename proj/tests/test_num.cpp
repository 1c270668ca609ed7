#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "kgda/num/gradcheck.hpp"
#include "kgda/num/kernels.hpp"
#include "kgda/num/matrix.hpp"
#include "kgda/num/optim.hpp"
#include "kgda/num/params.hpp"
#include "kgda/num/rng.hpp"
#include "kgda/num/tape.hpp"

using namespace kgda;
using namespace kgda::num;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Random values bounded away from zero, for ops with a kink at 0.
Matrix random_matrix_no_zero(int r, int c, Rng& rng, double margin = 0.05) {
    Matrix m = random_matrix(r, c, rng);
    for (std::size_t i = 0; i < m.size(); ++i) {
        double& x = m.data()[i];
        if (std::abs(x) < margin) x = x < 0 ? x - margin : x + margin;
    }
    return m;
}

bool bits_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.size() == 0 ||
            std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

std::filesystem::path temp_file(const std::string& stem) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() / "kgda_test_num";
    std::filesystem::create_directories(dir);
    return dir / (stem + "_" + std::to_string(++counter));
}

}  // namespace

TEST_CASE("elementwise kernels agree bitwise across backends") {
    if (!kernels::avx2_available()) {
        MESSAGE("avx2 not available; equivalence not exercised on this host");
        return;
    }
    const kernels::Ops& s = kernels::scalar_ops();
    const kernels::Ops& v = *kernels::avx2_ops();
    Rng rng(42);
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 100u}) {
        std::vector<double> a(n), b(n);
        for (auto& x : a) x = rng.uniform(-2, 2);
        for (auto& x : b) x = rng.uniform(-2, 2);
        std::vector<double> o1(n), o2(n);

        s.add(o1.data(), a.data(), b.data(), n);
        v.add(o2.data(), a.data(), b.data(), n);
        CHECK(bits_equal(o1, o2));

        s.sub(o1.data(), a.data(), b.data(), n);
        v.sub(o2.data(), a.data(), b.data(), n);
        CHECK(bits_equal(o1, o2));

        s.mul(o1.data(), a.data(), b.data(), n);
        v.mul(o2.data(), a.data(), b.data(), n);
        CHECK(bits_equal(o1, o2));

        o1 = b;
        o2 = b;
        s.mul_acc(o1.data(), a.data(), b.data(), n);
        v.mul_acc(o2.data(), a.data(), b.data(), n);
        CHECK(bits_equal(o1, o2));

        s.scale(o1.data(), a.data(), 1.7, n);
        v.scale(o2.data(), a.data(), 1.7, n);
        CHECK(bits_equal(o1, o2));

        o1 = b;
        o2 = b;
        s.axpy(o1.data(), -0.3, a.data(), n);
        v.axpy(o2.data(), -0.3, a.data(), n);
        CHECK(bits_equal(o1, o2));

        s.relu(o1.data(), a.data(), n);
        v.relu(o2.data(), a.data(), n);
        CHECK(bits_equal(o1, o2));

        o1 = b;
        o2 = b;
        s.relu_bwd_acc(o1.data(), b.data(), a.data(), n);
        v.relu_bwd_acc(o2.data(), b.data(), a.data(), n);
        CHECK(bits_equal(o1, o2));
    }
}

TEST_CASE("matmul kernels agree bitwise across backends and match a naive oracle") {
    const kernels::Ops& s = kernels::scalar_ops();
    const kernels::Ops* v = kernels::avx2_available() ? kernels::avx2_ops() : nullptr;
    Rng rng(7);
    struct Shape {
        int m, k, n;
    };
    for (Shape sh : {Shape{1, 1, 1}, Shape{2, 3, 4}, Shape{3, 5, 2}, Shape{7, 7, 7},
                     Shape{4, 16, 9}, Shape{5, 3, 8}, Shape{1, 9, 5}, Shape{6, 1, 6}}) {
        Matrix A = random_matrix(sh.m, sh.k, rng);
        Matrix B = random_matrix(sh.k, sh.n, rng);

        // Independent oracle: plain triple loop, k ascending.
        Matrix ref(sh.m, sh.n);
        for (int i = 0; i < sh.m; ++i)
            for (int j = 0; j < sh.n; ++j) {
                double acc = 0.0;
                for (int kk = 0; kk < sh.k; ++kk) acc += A(i, kk) * B(kk, j);
                ref(i, j) = acc;
            }

        Matrix c1(sh.m, sh.n);
        s.mm_nn_acc(c1.data(), A.data(), B.data(), sh.m, sh.k, sh.n);
        CHECK(max_abs_diff(c1, ref) < 1e-12);

        Matrix Bt = transpose(B);
        Matrix c2(sh.m, sh.n);
        s.mm_nt_acc(c2.data(), A.data(), Bt.data(), sh.m, sh.k, sh.n);
        CHECK(max_abs_diff(c2, ref) < 1e-12);

        Matrix At = transpose(A);
        Matrix c3(sh.m, sh.n);
        s.mm_tn_acc(c3.data(), At.data(), B.data(), sh.m, sh.k, sh.n);
        CHECK(max_abs_diff(c3, ref) < 1e-12);

        if (v) {
            Matrix d1(sh.m, sh.n), d2(sh.m, sh.n), d3(sh.m, sh.n);
            v->mm_nn_acc(d1.data(), A.data(), B.data(), sh.m, sh.k, sh.n);
            v->mm_nt_acc(d2.data(), A.data(), Bt.data(), sh.m, sh.k, sh.n);
            v->mm_tn_acc(d3.data(), At.data(), B.data(), sh.m, sh.k, sh.n);
            CHECK(bits_equal(c1, d1));
            CHECK(bits_equal(c2, d2));
            CHECK(bits_equal(c3, d3));
        }
    }
}

TEST_CASE("backend selection can be forced and reset") {
    kernels::force_backend(kernels::Backend::scalar);
    CHECK(std::string(kernels::active().name) == "scalar");
    if (kernels::avx2_available()) {
        kernels::force_backend(kernels::Backend::avx2);
        CHECK(std::string(kernels::active().name) == "avx2");
    } else {
        CHECK_THROWS_AS(kernels::force_backend(kernels::Backend::avx2), ConfigError);
    }
    kernels::reset_backend();
    CHECK((std::string(kernels::active().name) == "scalar" ||
           std::string(kernels::active().name) == "avx2"));
    kernels::reset_backend();
}

TEST_CASE("tape forward values match hand calculations") {
    Tape t;
    Var a = t.input(Matrix::from_rows({{1, 2}, {3, 4}}));
    Var b = t.input(Matrix::from_rows({{5, 6}, {7, 8}}));
    CHECK(t.value(t.matmul(a, b)) == Matrix::from_rows({{19, 22}, {43, 50}}));
    Var bt = t.input(Matrix::from_rows({{5, 7}, {6, 8}}));
    CHECK(t.value(t.matmul_nt(a, bt)) == Matrix::from_rows({{19, 22}, {43, 50}}));
    CHECK(t.value(t.add(a, b)) == Matrix::from_rows({{6, 8}, {10, 12}}));
    CHECK(t.value(t.sub(a, b)) == Matrix::from_rows({{-4, -4}, {-4, -4}}));
    CHECK(t.value(t.hadamard(a, b)) == Matrix::from_rows({{5, 12}, {21, 32}}));
    CHECK(t.value(t.scale(a, -2.0)) == Matrix::from_rows({{-2, -4}, {-6, -8}}));
    Var bias = t.input(Matrix::from_rows({{10, 20}}));
    CHECK(t.value(t.add_rowvec(a, bias)) == Matrix::from_rows({{11, 22}, {13, 24}}));
    Var r = t.input(Matrix::from_rows({{-1, 2}, {0.5, -3}}));
    CHECK(t.value(t.relu(r)) == Matrix::from_rows({{0, 2}, {0.5, 0}}));
    CHECK(t.value(t.concat_cols(a, b)) == Matrix::from_rows({{1, 2, 5, 6}, {3, 4, 7, 8}}));
    CHECK(t.value(t.gather_rows(a, {1, 0, 1})) == Matrix::from_rows({{3, 4}, {1, 2}, {3, 4}}));
    CHECK(t.value(t.row_sum(a)) == Matrix::from_rows({{3}, {7}}));
    CHECK(t.scalar_value(t.sum_all(a)) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(t.scalar_value(t.mean_all(a)) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(t.value(t.reverse(a, -1.0)) == t.value(a));

    auto plan = std::make_shared<AggPlan>(AggPlan{{0, 0, 0.5}, {0, 1, 0.5}, {1, 1, 2.0}});
    Var ag = t.aggregate(a, plan, 2);
    CHECK(t.value(ag) == Matrix::from_rows({{2, 3}, {6, 8}}));
}

TEST_CASE("tape shape errors") {
    Tape t;
    Var a = t.input(Matrix(2, 3));
    Var b = t.input(Matrix(2, 3));
    CHECK_THROWS_AS(t.matmul(a, b), ShapeError);
    Var c = t.input(Matrix(3, 2));
    CHECK_THROWS_AS(t.add(a, c), ShapeError);
    CHECK_THROWS_AS(t.gather_rows(a, {0, 2}), ShapeError);
    CHECK_THROWS_AS(t.backward(a), ShapeError);
    Var bias = t.input(Matrix(1, 2));
    CHECK_THROWS_AS(t.add_rowvec(a, bias), ShapeError);
}

TEST_CASE("logistic is stable and pinned") {
    CHECK(logistic(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(logistic(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    CHECK(logistic(-1.0) == doctest::Approx(0.2689414213699951).epsilon(1e-14));
    CHECK(logistic(1000.0) < 1.0);
    CHECK(logistic(1000.0) > 0.99);
    CHECK(logistic(-1000.0) > 0.0);
    CHECK(logistic(-1000.0) < 1e-200);
    Tape t;
    Var x = t.input(Matrix::from_rows({{0, 1, -1, 1000, -1000}}));
    const Matrix& s = t.value(t.sigmoid(x));
    for (int j = 0; j < 5; ++j) {
        CHECK(s(0, j) > 0.0);
        CHECK(s(0, j) < 1.0);
    }
    CHECK(s(0, 1) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
}

TEST_CASE("loss values match closed forms") {
    Matrix logits = Matrix::from_rows({{1, 2, 3}});
    CHECK(softmax_cross_entropy_value(logits, {2}) ==
          doctest::Approx(0.4076059644443806).epsilon(1e-12));
    CHECK(softmax_cross_entropy_value(logits, {0}) ==
          doctest::Approx(2.4076059644443806).epsilon(1e-12));
    Matrix uniform = Matrix::from_rows({{0.7, 0.7, 0.7}, {-1, -1, -1}});
    CHECK(softmax_cross_entropy_value(uniform, {0, 2}) ==
          doctest::Approx(1.0986122886681098).epsilon(1e-12));
    CHECK_THROWS_AS(softmax_cross_entropy_value(logits, {3}), DomainError);
    CHECK_THROWS_AS(softmax_cross_entropy_value(logits, {-1}), DomainError);
    CHECK_THROWS_AS(softmax_cross_entropy_value(logits, {0, 1}), ShapeError);

    Matrix p = Matrix::from_rows({{0.9}, {0.2}});
    Matrix y = Matrix::from_rows({{1}, {0}});
    CHECK(binary_cross_entropy_value(p, y) == doctest::Approx(0.164252033486018).epsilon(1e-12));
    CHECK(binary_cross_entropy_value(Matrix::from_rows({{0.5}}), Matrix::from_rows({{1}})) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-12));
    Matrix bad = Matrix::from_rows({{0.5}, {0.5}});
    CHECK_THROWS_AS(binary_cross_entropy_value(p, bad), DomainError);
    // Exact 0/1 probabilities stay finite through the clamp.
    CHECK(std::isfinite(
        binary_cross_entropy_value(Matrix::from_rows({{0.0}}), Matrix::from_rows({{1}}))));

    Matrix pred = Matrix::from_rows({{1, 2}, {3, 5}});
    Matrix tgt = Matrix::from_rows({{0, 2}, {1, 1}});
    CHECK(mean_squared_error_value(pred, tgt) == doctest::Approx(10.5).epsilon(1e-12));
    CHECK(mean_squared_error_value(pred, tgt, 1.0) == doctest::Approx(21.0).epsilon(1e-12));
    CHECK_THROWS_AS(mean_squared_error_value(pred, Matrix(1, 2)), ShapeError);
}

TEST_CASE("tape loss ops agree with the standalone values") {
    Tape t;
    Var logits = t.input(Matrix::from_rows({{0.3, -1.2}, {2.0, 0.1}, {-0.5, -0.5}}));
    std::vector<int> labels{1, 0, 1};
    CHECK(t.scalar_value(t.softmax_cross_entropy(logits, labels)) ==
          doctest::Approx(softmax_cross_entropy_value(t.value(logits), labels)).epsilon(1e-14));

    Var probs = t.sigmoid(t.input(Matrix::from_rows({{0.4}, {-1.0}, {2.2}})));
    Matrix targets = Matrix::from_rows({{1}, {0}, {1}});
    CHECK(t.scalar_value(t.binary_cross_entropy(probs, targets)) ==
          doctest::Approx(binary_cross_entropy_value(t.value(probs), targets)).epsilon(1e-14));

    Var pred = t.input(Matrix::from_rows({{0.5, 1.5}}));
    Matrix tgt = Matrix::from_rows({{1.0, 1.0}});
    CHECK(t.scalar_value(t.mean_squared_error(pred, tgt)) ==
          doctest::Approx(mean_squared_error_value(t.value(pred), tgt)).epsilon(1e-14));
}

namespace {

// Wraps a tape program over `store` into the gradcheck callback shape.
GradCheckResult check_program(ParamStore& store,
                              const std::function<Var(Tape&, ParamStore&)>& program,
                              double tol = 1e-4) {
    LossFn fn = [&](ParamStore& p, std::vector<Matrix>* grads) {
        Tape t;
        Var loss = program(t, p);
        double v = t.scalar_value(loss);
        if (grads) {
            t.backward(loss);
            *grads = t.param_grads(p);
        }
        return v;
    };
    return finite_diff_check(store, fn, 1e-5, tol);
}

}  // namespace

TEST_CASE("finite differences confirm every op's gradient") {
    Rng rng(123);

    SUBCASE("matmul chain") {
        ParamStore s;
        s.add("A", random_matrix(3, 4, rng));
        s.add("B", random_matrix(4, 2, rng));
        auto r = check_program(s, [](Tape& t, ParamStore& p) {
            return t.mean_all(t.matmul(t.param(p, 0), t.param(p, 1)));
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("matmul_nt plus bias and relu") {
        ParamStore s;
        s.add("X", random_matrix_no_zero(4, 3, rng));
        s.add("W", random_matrix_no_zero(5, 3, rng));
        s.add("b", random_matrix(1, 5, rng));
        auto r = check_program(s, [](Tape& t, ParamStore& p) {
            Var h = t.add_rowvec(t.matmul_nt(t.param(p, 0), t.param(p, 1)), t.param(p, 2));
            return t.mean_all(t.relu(h));
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("sub hadamard scale sigmoid") {
        ParamStore s;
        s.add("a", random_matrix(3, 3, rng));
        s.add("b", random_matrix(3, 3, rng));
        auto r = check_program(s, [](Tape& t, ParamStore& p) {
            Var h = t.hadamard(t.sub(t.param(p, 0), t.param(p, 1)), t.param(p, 1));
            return t.mean_all(t.sigmoid(t.scale(h, 1.3)));
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("concat gather row_sum") {
        ParamStore s;
        s.add("a", random_matrix(4, 2, rng));
        s.add("b", random_matrix(4, 3, rng));
        auto r = check_program(s, [](Tape& t, ParamStore& p) {
            Var cat = t.concat_cols(t.param(p, 0), t.param(p, 1));
            Var g = t.gather_rows(cat, {2, 0, 2, 3});  // repeated row on purpose
            return t.mean_all(t.row_sum(g));
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("aggregate") {
        ParamStore s;
        s.add("x", random_matrix(5, 3, rng));
        auto plan = std::make_shared<AggPlan>(
            AggPlan{{0, 1, 0.5}, {0, 2, 0.5}, {1, 0, 1.0}, {2, 4, 0.25}, {2, 2, 0.75}});
        auto r = check_program(s, [plan](Tape& t, ParamStore& p) {
            return t.mean_all(t.aggregate(t.param(p, 0), plan, 3));
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("dropout with fixed noise") {
        ParamStore s;
        s.add("x", random_matrix(4, 6, rng));
        auto r = check_program(s, [](Tape& t, ParamStore& p) {
            Rng noise(999);  // identical mask on every evaluation
            return t.mean_all(t.dropout(t.param(p, 0), 0.4, noise));
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("reverse forwards the identity but backpropagates the scaled gradient") {
        // Not finite-differenceable by design: the forward value ignores the
        // multiplier. Its contract is that gradients equal those of scale()
        // by the same factor, and scale() is FD-checked above.
        ParamStore s;
        s.add("x", random_matrix(3, 3, rng));
        Tape t1;
        Var r1 = t1.reverse(t1.param(s, 0), -0.7);
        CHECK(t1.value(r1) == s.value(0));
        Var l1 = t1.mean_all(r1);
        t1.backward(l1);
        Tape t2;
        Var l2 = t2.mean_all(t2.scale(t2.param(s, 0), -0.7));
        t2.backward(l2);
        CHECK(max_abs_diff(t1.param_grad(s, 0), t2.param_grad(s, 0)) < 1e-15);
    }

    SUBCASE("softmax cross entropy") {
        ParamStore s;
        s.add("logits", random_matrix(5, 3, rng));
        std::vector<int> labels{0, 2, 1, 1, 0};
        auto r = check_program(s, [labels](Tape& t, ParamStore& p) {
            return t.softmax_cross_entropy(t.param(p, 0), labels);
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("binary cross entropy through sigmoid") {
        ParamStore s;
        s.add("logit", random_matrix(6, 1, rng, -2, 2));
        Matrix targets(6, 1);
        for (int i = 0; i < 6; ++i) targets(i, 0) = i % 2;
        auto r = check_program(s, [targets](Tape& t, ParamStore& p) {
            return t.binary_cross_entropy(t.sigmoid(t.param(p, 0)), targets);
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }

    SUBCASE("mean squared error") {
        ParamStore s;
        s.add("pred", random_matrix(4, 3, rng));
        Matrix target = random_matrix(4, 3, rng);
        auto r = check_program(s, [target](Tape& t, ParamStore& p) {
            return t.mean_squared_error(t.param(p, 0), target);
        });
        CHECK_MESSAGE(r.ok, r.worst_at, " rel=", r.worst_rel);
    }
}

TEST_CASE("a -1 reversal edge cancels exactly its own contribution") {
    ParamStore s;
    Rng rng(5);
    s.add("x", random_matrix(3, 2, rng));

    Tape t;
    Var x = t.param(s, 0);
    Var loss = t.sum_all(t.add(t.reverse(x, -1.0), x));
    t.backward(loss);
    Matrix g = t.param_grad(s, 0);
    CHECK(max_abs_diff(g, Matrix(3, 2)) == 0.0);  // +1 and -1 paths cancel

    Tape t2;
    Var x2 = t2.param(s, 0);
    Var loss2 = t2.sum_all(t2.add(t2.reverse(x2, -0.25), x2));
    t2.backward(loss2);
    Matrix g2 = t2.param_grad(s, 0);
    CHECK(max_abs_diff(g2, Matrix::constant(3, 2, 0.75)) < 1e-15);
}

TEST_CASE("gradients accumulate across parameter reuse and untouched params stay zero") {
    ParamStore s;
    Rng rng(9);
    s.add("w", random_matrix(2, 2, rng));
    s.add("unused", random_matrix(3, 3, rng));

    Tape t;
    Var w1 = t.param(s, 0);
    Var w2 = t.param(s, 0);
    Var loss = t.sum_all(t.add(w1, w2));
    t.backward(loss);
    CHECK(max_abs_diff(t.param_grad(s, 0), Matrix::constant(2, 2, 2.0)) < 1e-15);
    CHECK(max_abs_diff(t.param_grad(s, 1), Matrix(3, 3)) == 0.0);
}

TEST_CASE("dropout semantics") {
    Rng rng(21);
    Matrix x = random_matrix_no_zero(40, 25, rng);

    SUBCASE("eval mode and p=0 are identities") {
        Tape te(Tape::Mode::eval);
        Rng noise(3);
        CHECK(bits_equal(te.value(te.dropout(te.input(x), 0.5, noise)), x));
        Tape tt;
        CHECK(bits_equal(tt.value(tt.dropout(tt.input(x), 0.0, noise)), x));
    }

    SUBCASE("train mode zeroes a p-fraction and rescales the rest") {
        Tape t;
        Rng noise(17);
        const Matrix& y = t.value(t.dropout(t.input(x), 0.25, noise));
        int zeros = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y.data()[i] == 0.0) {
                ++zeros;
            } else {
                CHECK(y.data()[i] == doctest::Approx(x.data()[i] / 0.75).epsilon(1e-12));
            }
        }
        double frac = static_cast<double>(zeros) / static_cast<double>(y.size());
        CHECK(frac == doctest::Approx(0.25).epsilon(0.25));
    }

    SUBCASE("identical seeds give identical masks") {
        Tape t1, t2;
        Rng n1(88), n2(88);
        CHECK(bits_equal(t1.value(t1.dropout(t1.input(x), 0.5, n1)),
                         t2.value(t2.dropout(t2.input(x), 0.5, n2))));
    }

    SUBCASE("rates outside [0,1) are rejected") {
        Tape t;
        Rng noise(1);
        Var v = t.input(x);
        CHECK_THROWS_AS(t.dropout(v, 1.0, noise), ConfigError);
        CHECK_THROWS_AS(t.dropout(v, -0.1, noise), ConfigError);
        CHECK_THROWS_AS(t.dropout(v, 1.5, noise), ConfigError);
    }
}

TEST_CASE("adam takes the bias-corrected step") {
    ParamStore s;
    s.add("p", Matrix::constant(1, 2, 1.0));
    AdamConfig cfg;
    cfg.lr = 0.1;
    Adam opt(s, cfg);

    std::vector<Matrix> grads;
    Matrix g(1, 2);
    g(0, 0) = 0.5;
    g(0, 1) = -2.0;
    grads.push_back(g);
    opt.step(s, grads);
    // First step from zero state: delta = lr * g / (|g| + eps).
    CHECK(s.value(0)(0, 0) == doctest::Approx(1.0 - 0.09999999800000003).epsilon(1e-12));
    CHECK(s.value(0)(0, 1) == doctest::Approx(1.0 + 0.0999999995).epsilon(1e-12));
    CHECK(opt.steps() == 1);
}

TEST_CASE("optimizers leave params alone under zero gradient") {
    ParamStore s;
    Rng rng(31);
    s.add("p", random_matrix(3, 4, rng));
    Matrix before = s.value(0);

    Adam adam(s);
    std::vector<Matrix> zero{Matrix(3, 4)};
    adam.step(s, zero);
    adam.step(s, zero);
    CHECK(bits_equal(s.value(0), before));

    Sgd sgd(0.5);
    sgd.step(s, zero);
    CHECK(bits_equal(s.value(0), before));
}

TEST_CASE("sgd applies p -= lr * g and shape mismatches throw") {
    ParamStore s;
    s.add("p", Matrix::constant(2, 2, 1.0));
    Sgd sgd(0.1);
    std::vector<Matrix> grads{Matrix::constant(2, 2, 2.0)};
    sgd.step(s, grads);
    CHECK(max_abs_diff(s.value(0), Matrix::constant(2, 2, 0.8)) < 1e-15);

    std::vector<Matrix> bad{Matrix(3, 2)};
    CHECK_THROWS_AS(sgd.step(s, bad), ShapeError);
    Adam adam(s);
    CHECK_THROWS_AS(adam.step(s, bad), ShapeError);
    std::vector<Matrix> wrong_count;
    CHECK_THROWS_AS(adam.step(s, wrong_count), ShapeError);
}

TEST_CASE("optimizer wrapper dispatches to both kinds") {
    ParamStore s;
    s.add("p", Matrix::constant(1, 1, 1.0));
    std::vector<Matrix> g{Matrix::constant(1, 1, 1.0)};

    Optimizer sgd(Optimizer::Kind::sgd, s, 0.25);
    sgd.step(s, g);
    CHECK(s.value(0)(0, 0) == doctest::Approx(0.75).epsilon(1e-15));

    Optimizer adam(Optimizer::Kind::adam, s, 0.1);
    adam.step(s, g);
    CHECK(s.value(0)(0, 0) == doctest::Approx(0.75 - 0.09999999900000002).epsilon(1e-9));
}

TEST_CASE("rng streams are deterministic and children are consumption-independent") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    Rng parent(77);
    Rng child_before = parent.child(3);
    for (int i = 0; i < 50; ++i) parent.uniform();
    Rng child_after = parent.child(3);
    for (int i = 0; i < 20; ++i) CHECK(child_before.next() == child_after.next());

    Rng c1 = parent.child(1), c2 = parent.child(2);
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ |= (c1.next() != c2.next());
    CHECK(differ);

    Rng u(5);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(u.below(1) == 0);
    bool lo = false, hi = false;
    for (int i = 0; i < 200; ++i) {
        int v = u.uniform_int(2, 4);
        CHECK(v >= 2);
        CHECK(v <= 4);
        lo |= (v == 2);
        hi |= (v == 4);
    }
    CHECK(lo);
    CHECK(hi);

    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7}, v2{1, 2, 3, 4, 5, 6, 7};
    Rng s1(9), s2(9);
    s1.shuffle(v1);
    s2.shuffle(v2);
    CHECK(v1 == v2);
}

TEST_CASE("param store naming, checksum, and serialization") {
    ParamStore s;
    Rng rng(11);
    int i0 = s.add("alpha", random_matrix(2, 3, rng));
    int i1 = s.add("beta", random_matrix(1, 4, rng));
    CHECK(i0 == 0);
    CHECK(i1 == 1);
    CHECK(s.index_of("beta") == 1);
    CHECK(s.index_of("gamma") == -1);
    CHECK(s.name(0) == "alpha");
    CHECK_THROWS_AS(s.add("alpha", Matrix(1, 1)), ConfigError);

    std::uint64_t c0 = s.checksum();
    CHECK(c0 == s.checksum());
    s.value(0)(0, 0) += 1e-9;
    CHECK(s.checksum() != c0);

    auto path = temp_file("params.bin");
    {
        util::BinWriter w(path.string());
        s.serialize(w);
        w.commit();
    }
    util::BinReader r(path.string());
    ParamStore s2 = ParamStore::deserialize(r);
    CHECK(s2.checksum() == s.checksum());
    CHECK(s2.value("alpha") == s.value("alpha"));
    CHECK(s2.value("beta") == s.value("beta"));
    std::filesystem::remove(path);
}

TEST_CASE("tape misuse is rejected") {
    ParamStore s1, s2;
    s1.add("a", Matrix(1, 1));
    s2.add("b", Matrix(1, 1));

    Tape t;
    t.param(s1, 0);
    CHECK_THROWS_AS(t.param(s2, 0), ConfigError);
    CHECK_THROWS_AS(t.param(s1, 5), ConfigError);

    Tape t2;
    Var x = t2.input(Matrix::constant(1, 1, 2.0));
    CHECK_THROWS_AS(t2.node_grad(x), ConfigError);
    t2.backward(x);
    CHECK_THROWS_AS(t2.backward(x), ConfigError);

    Tape t3;
    Var y = t3.input(Matrix(2, 2));
    CHECK_THROWS_AS(t3.backward(y), ShapeError);
}

TEST_CASE("glorot init respects its bound and is seed-deterministic") {
    Rng r1(4), r2(4);
    Matrix a = glorot_init(20, 30, r1);
    Matrix b = glorot_init(20, 30, r2);
    CHECK(bits_equal(a, b));
    const double bound = std::sqrt(6.0 / 50.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.data()[i] <= bound);
        CHECK(a.data()[i] >= -bound);
    }
}

TEST_CASE("matrix utilities") {
    CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
    Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(transpose(m) == Matrix::from_rows({{1, 3}, {2, 4}}));
    CHECK_THROWS_AS(m.at(2, 0), ShapeError);
    CHECK_THROWS_AS(m.at(0, -1), ShapeError);
    CHECK(m.at(1, 1) == 4.0);
    CHECK(all_finite(m));
    m(0, 0) = std::nan("");
    CHECK(!all_finite(m));
}
