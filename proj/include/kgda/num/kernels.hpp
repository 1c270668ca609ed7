#pragma once

#include <cstddef>

namespace kgda::num::kernels {

// Hot inner loops behind a function-pointer table. Two implementations
// exist: a scalar reference and an AVX2 variant. Both perform the exact
// same per-element operation sequence (single multiply then add, ascending
// accumulation index, no FMA contraction), so their results agree bitwise
// and the equivalence is enforced by tests rather than tolerance.
//
// Matrix arguments are dense row-major. The mm_* kernels accumulate into
// the destination, which the caller zeroes (or pre-loads) beforehand.
struct Ops {
    const char* name;

    // out[i] = a[i] + b[i]
    void (*add)(double* out, const double* a, const double* b, std::size_t n);
    // out[i] = a[i] - b[i]
    void (*sub)(double* out, const double* a, const double* b, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(double* out, const double* a, const double* b, std::size_t n);
    // dst[i] += a[i] * b[i]
    void (*mul_acc)(double* dst, const double* a, const double* b, std::size_t n);
    // out[i] = c * a[i]
    void (*scale)(double* out, const double* a, double c, std::size_t n);
    // dst[i] += c * src[i]
    void (*axpy)(double* dst, double c, const double* src, std::size_t n);
    // out[i] = max(x[i], 0)
    void (*relu)(double* out, const double* x, std::size_t n);
    // gx[i] += x[i] > 0 ? g[i] : 0
    void (*relu_bwd_acc)(double* gx, const double* g, const double* x, std::size_t n);
    // C[m x n] += A[m x k] * B[k x n]
    void (*mm_nn_acc)(double* c, const double* a, const double* b, std::size_t m,
                      std::size_t k, std::size_t n);
    // C[m x n] += A[m x k] * B^T, B stored [n x k]
    void (*mm_nt_acc)(double* c, const double* a, const double* b, std::size_t m,
                      std::size_t k, std::size_t n);
    // C[m x n] += A^T * B, A stored [k x m], B stored [k x n]
    void (*mm_tn_acc)(double* c, const double* a, const double* b, std::size_t m,
                      std::size_t k, std::size_t n);
};

enum class Backend { scalar, avx2 };

const Ops& scalar_ops();

// Null when the binary was built without AVX2 support.
const Ops* avx2_ops();

// True when the running CPU can execute the AVX2 variant.
bool avx2_available();

// Active table: AVX2 when available unless overridden by force_backend or
// the KGDA_KERNELS environment variable ("scalar" / "avx2").
const Ops& active();
void force_backend(Backend b);
void reset_backend();

}  // namespace kgda::num::kernels
