#pragma once

// Arithmetic kernels behind the network's inner loops: one scalar reference
// implementation plus SIMD variants selected at runtime. Every backend is
// required to produce bit-identical results, so trained models and reports
// do not depend on which backend the dispatcher picked.
//
// The contract that makes this possible:
//   * dot() accumulates the first floor(n/4)*4 elements in four independent
//     lanes (lane j sums elements j, j+4, j+8, ...), combines them as
//     (lane0 + lane2) + (lane1 + lane3), then folds the tail sequentially.
//   * All other kernels are elementwise with a fixed expression tree.
//   * No backend may fuse multiply-add; each *, +, - rounds once.
//
// Equivalence is enforced by tests/test_kernels.cpp with exact comparisons.

#include <cstddef>
#include <string>
#include <vector>

namespace flowpat::kernels {

struct KernelTable {
    const char* name;

    // sum_i a[i]*b[i] in the lane-4 accumulation order described above.
    double (*dot)(const double* a, const double* b, std::size_t n);

    // y[r] = dot(w_row_r, x) + bias[r]; w is row-major rows x cols.
    void (*matvec_bias)(const double* w, const double* x, const double* bias,
                        double* y, std::size_t rows, std::size_t cols);

    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    // y[i] = a * x[i]
    void (*scale)(double a, const double* x, double* y, std::size_t n);

    // y[i] = max(x[i], 0)
    void (*relu)(const double* x, double* y, std::size_t n);

    // grad_pre[i] = pre[i] > 0 ? grad_post[i] : 0   (derivative at 0 is 0)
    void (*relu_backward)(const double* pre, const double* grad_post,
                          double* grad_pre, std::size_t n);

    // w[i] -= lr * ((g[i] + l1*sign(w[i])) + (2*l2)*w[i]), sign(0) = 0
    void (*sgd_weights)(double* w, const double* g, std::size_t n,
                        double lr, double l1, double l2);

    // b[i] -= lr * g[i]
    void (*sgd_biases)(double* b, const double* g, std::size_t n, double lr);
};

/// The portable reference backend. Always available.
const KernelTable& scalar_table();

/// AVX2 backend, or nullptr when the build or the CPU does not support it.
const KernelTable* avx2_table();

/// Backends usable on this machine, reference first.
std::vector<const KernelTable*> available_tables();

/// The selected backend. Defaults to the fastest available; the environment
/// variable FLOWPAT_KERNELS=scalar|avx2 overrides the choice.
const KernelTable& active();

/// Replaces the active backend (used by the equivalence tests).
void set_active(const KernelTable& table);

inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline void matvec_bias(const double* w, const double* x, const double* bias,
                        double* y, std::size_t rows, std::size_t cols) {
    active().matvec_bias(w, x, bias, y, rows, cols);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double a, const double* x, double* y, std::size_t n) {
    active().scale(a, x, y, n);
}
inline void relu(const double* x, double* y, std::size_t n) {
    active().relu(x, y, n);
}
inline void relu_backward(const double* pre, const double* grad_post,
                          double* grad_pre, std::size_t n) {
    active().relu_backward(pre, grad_post, grad_pre, n);
}
inline void sgd_weights(double* w, const double* g, std::size_t n,
                        double lr, double l1, double l2) {
    active().sgd_weights(w, g, n, lr, l1, l2);
}
inline void sgd_biases(double* b, const double* g, std::size_t n, double lr) {
    active().sgd_biases(b, g, n, lr);
}

} // namespace flowpat::kernels
