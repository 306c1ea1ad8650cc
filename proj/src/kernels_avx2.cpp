// AVX2 kernels. Multiply and add stay separate (no FMA) and the horizontal
// reduction order matches the scalar reference, so results are bit-identical
// to kernels_scalar.cpp. This translation unit is compiled with -mavx2 on
// x86-64 only; callers must check CPU support via avx2_table().

#include "flowpat/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

namespace flowpat::kernels {
namespace {

inline double hsum(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);     // [l0, l1]
    const __m128d hi = _mm256_extractf128_pd(acc, 1);   // [l2, l3]
    const __m128d s = _mm_add_pd(lo, hi);               // [l0+l2, l1+l3]
    const __m128d h = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, h));             // (l0+l2)+(l1+l3)
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void matvec_bias_avx2(const double* w, const double* x, const double* bias,
                      double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_avx2(w + r * cols, x, cols) + bias[r];
    }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void scale_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) y[i] = a * x[i];
}

void relu_avx2(const double* x, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        // max(x, 0) keeps the second operand on NaN/equal, matching x>0?x:0
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_avx2(const double* pre, const double* grad_post,
                        double* grad_pre, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(grad_pre + i,
                         _mm256_and_pd(mask, _mm256_loadu_pd(grad_post + i)));
    }
    for (; i < n; ++i) grad_pre[i] = pre[i] > 0.0 ? grad_post[i] : 0.0;
}

void sgd_weights_avx2(double* w, const double* g, std::size_t n,
                      double lr, double l1, double l2) {
    const double two_l2 = 2.0 * l2;
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d vl1 = _mm256_set1_pd(l1);
    const __m256d vl2 = _mm256_set1_pd(two_l2);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d neg_one = _mm256_set1_pd(-1.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        const __m256d vw = _mm256_loadu_pd(w + i);
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d gt = _mm256_cmp_pd(vw, zero, _CMP_GT_OQ);
        const __m256d lt = _mm256_cmp_pd(vw, zero, _CMP_LT_OQ);
        const __m256d sign = _mm256_or_pd(_mm256_and_pd(gt, one),
                                          _mm256_and_pd(lt, neg_one));
        const __m256d step = _mm256_add_pd(
            _mm256_add_pd(vg, _mm256_mul_pd(vl1, sign)),
            _mm256_mul_pd(vl2, vw));
        _mm256_storeu_pd(w + i, _mm256_sub_pd(vw, _mm256_mul_pd(vlr, step)));
    }
    for (; i < n; ++i) {
        const double s = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
        const double step = (g[i] + l1 * s) + two_l2 * w[i];
        w[i] = w[i] - lr * step;
    }
}

void sgd_biases_avx2(double* b, const double* g, std::size_t n, double lr) {
    const __m256d vlr = _mm256_set1_pd(lr);
    std::size_t i = 0;
    const std::size_t main = n & ~std::size_t{3};
    for (; i < main; i += 4) {
        const __m256d vb = _mm256_loadu_pd(b + i);
        const __m256d vg = _mm256_loadu_pd(g + i);
        _mm256_storeu_pd(b + i, _mm256_sub_pd(vb, _mm256_mul_pd(vlr, vg)));
    }
    for (; i < n; ++i) b[i] = b[i] - lr * g[i];
}

constexpr KernelTable kAvx2Table = {
    "avx2",
    dot_avx2,
    matvec_bias_avx2,
    axpy_avx2,
    scale_avx2,
    relu_avx2,
    relu_backward_avx2,
    sgd_weights_avx2,
    sgd_biases_avx2,
};

} // namespace

const KernelTable* detail_avx2_table_if_compiled() { return &kAvx2Table; }

} // namespace flowpat::kernels

#else

namespace flowpat::kernels {
const KernelTable* detail_avx2_table_if_compiled() { return nullptr; }
} // namespace flowpat::kernels

#endif
