// Reference kernels. The lane-4 dot accumulation mirrors a 4-wide SIMD
// register exactly; see kernels.hpp for the contract.

#include "flowpat/kernels.hpp"

namespace flowpat::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        acc0 += a[i + 0] * b[i + 0];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double r = (acc0 + acc2) + (acc1 + acc3);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void matvec_bias_scalar(const double* w, const double* x, const double* bias,
                        double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_scalar(w + r * cols, x, cols) + bias[r];
    }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void relu_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_scalar(const double* pre, const double* grad_post,
                          double* grad_pre, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        grad_pre[i] = pre[i] > 0.0 ? grad_post[i] : 0.0;
    }
}

void sgd_weights_scalar(double* w, const double* g, std::size_t n,
                        double lr, double l1, double l2) {
    const double two_l2 = 2.0 * l2;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
        const double step = (g[i] + l1 * s) + two_l2 * w[i];
        w[i] = w[i] - lr * step;
    }
}

void sgd_biases_scalar(double* b, const double* g, std::size_t n, double lr) {
    for (std::size_t i = 0; i < n; ++i) b[i] = b[i] - lr * g[i];
}

constexpr KernelTable kScalarTable = {
    "scalar",
    dot_scalar,
    matvec_bias_scalar,
    axpy_scalar,
    scale_scalar,
    relu_scalar,
    relu_backward_scalar,
    sgd_weights_scalar,
    sgd_biases_scalar,
};

} // namespace

const KernelTable& scalar_table() { return kScalarTable; }

} // namespace flowpat::kernels
