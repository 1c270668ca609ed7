#include "kgda/num/kernels.hpp"

// Reference implementations. Compiled with -ffp-contract=off so no FMA is
// introduced; the AVX2 variant mirrors the operation order exactly.

namespace kgda::num::kernels {
namespace {

void s_add(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

void s_scale(double* out, const double* a, double c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = c * a[i];
}

void s_axpy(double* dst, double c, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += c * src[i];
}

void s_relu(double* out, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void s_relu_bwd_acc(double* gx, const double* g, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

// Row-axpy order: for each output row, walk k ascending and stream along
// the B row. Every C element accumulates over k in ascending order.
void s_mm_nn_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double s = ai[kk];
            const double* bk = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += s * bk[j];
        }
    }
}

// C += A * B^T as row dot products; k ascends per element just like above.
void s_mm_nt_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = ci[j];
            for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
            ci[j] = acc;
        }
    }
}

void s_mm_tn_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* ak = a + kk * m;
        const double* bk = b + kk * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = ak[i];
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += s * bk[j];
        }
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        "scalar", s_add,  s_sub,          s_mul,      s_mul_acc,  s_scale,
        s_axpy,   s_relu, s_relu_bwd_acc, s_mm_nn_acc, s_mm_nt_acc, s_mm_tn_acc,
    };
    return table;
}

}  // namespace kgda::num::kernels
