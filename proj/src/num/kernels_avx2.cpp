#include "kgda/num/kernels.hpp"

// AVX2 variant. Built with -mavx2 but with FMA contraction disabled, and
// every kernel keeps the scalar per-element operation order: one multiply,
// one add, accumulation index ascending. Lanes are independent elements, so
// results match the scalar table bitwise. Dot products are deliberately
// expressed as row-axpy over a transposed operand instead of horizontal
// reductions, which would reassociate the sum.

#if defined(__AVX2__)

#include <immintrin.h>

#include <vector>

namespace kgda::num::kernels {
namespace {

void v_add(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_mul_acc(double* dst, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void v_scale(double* out, const double* a, double c, std::size_t n) {
    const __m256d cv = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(cv, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) out[i] = c * a[i];
}

void v_axpy(double* dst, double c, const double* src, std::size_t n) {
    const __m256d cv = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(cv, _mm256_loadu_pd(src + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < n; ++i) dst[i] += c * src[i];
}

void v_relu(double* out, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    // max_pd(x, 0) returns the second operand on ties, matching the scalar
    // branch which yields +0.0 for any non-positive input.
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_relu_bwd_acc(double* gx, const double* g, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), gated));
    }
    for (; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void row_axpy(double* ci, double s, const double* bk, std::size_t n) {
    const __m256d sv = _mm256_set1_pd(s);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d prod = _mm256_mul_pd(sv, _mm256_loadu_pd(bk + j));
        _mm256_storeu_pd(ci + j, _mm256_add_pd(_mm256_loadu_pd(ci + j), prod));
    }
    for (; j < n; ++j) ci[j] += s * bk[j];
}

void v_mm_nn_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) row_axpy(ci, ai[kk], b + kk * n, n);
    }
}

void v_mm_nt_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
    // Transpose B ([n x k] -> [k x n]) and reuse the nn pattern; each C
    // element still accumulates over k ascending.
    std::vector<double> bt(k * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t kk = 0; kk < k; ++kk) bt[kk * n + j] = b[j * k + kk];
    v_mm_nn_acc(c, a, bt.data(), m, k, n);
}

void v_mm_tn_acc(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                 std::size_t n) {
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* ak = a + kk * m;
        const double* bk = b + kk * n;
        for (std::size_t i = 0; i < m; ++i) row_axpy(c + i * n, ak[i], bk, n);
    }
}

}  // namespace

const Ops* avx2_ops() {
    static const Ops table = {
        "avx2",  v_add,  v_sub,          v_mul,      v_mul_acc,  v_scale,
        v_axpy,  v_relu, v_relu_bwd_acc, v_mm_nn_acc, v_mm_nt_acc, v_mm_tn_acc,
    };
    return &table;
}

}  // namespace kgda::num::kernels

#else

namespace kgda::num::kernels {

const Ops* avx2_ops() { return nullptr; }

}  // namespace kgda::num::kernels

#endif
