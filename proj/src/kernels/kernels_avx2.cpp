// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>

namespace neumatc::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) s = std::fma(a[i], b[i], s);
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double sum_squares(const double* a, std::size_t n) { return dot(a, a, n); }

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s = std::fma(d, d, s);
    }
    return s;
}

namespace {

// 4x8 register block: eight ymm accumulators, one broadcast per row per p.
// Each accumulator lane is a sequential fma chain over p, matching the tails.
void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  std::size_t a_rs, std::size_t a_cs, const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, bool accumulate) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        double* c0 = c + (i + 0) * ldc;
        double* c1 = c + (i + 1) * ldc;
        double* c2 = c + (i + 2) * ldc;
        double* c3 = c + (i + 3) * ldc;
        const double* a0 = a + (i + 0) * a_rs;
        const double* a1 = a + (i + 1) * a_rs;
        const double* a2 = a + (i + 2) * a_rs;
        const double* a3 = a + (i + 3) * a_rs;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256d r00, r01, r10, r11, r20, r21, r30, r31;
            if (accumulate) {
                r00 = _mm256_loadu_pd(c0 + j); r01 = _mm256_loadu_pd(c0 + j + 4);
                r10 = _mm256_loadu_pd(c1 + j); r11 = _mm256_loadu_pd(c1 + j + 4);
                r20 = _mm256_loadu_pd(c2 + j); r21 = _mm256_loadu_pd(c2 + j + 4);
                r30 = _mm256_loadu_pd(c3 + j); r31 = _mm256_loadu_pd(c3 + j + 4);
            } else {
                r00 = r01 = r10 = r11 = r20 = r21 = r30 = r31 = _mm256_setzero_pd();
            }
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * ldb + j;
                const __m256d b0 = _mm256_loadu_pd(brow);
                const __m256d b1 = _mm256_loadu_pd(brow + 4);
                const std::size_t ao = p * a_cs;
                __m256d av = _mm256_broadcast_sd(a0 + ao);
                r00 = _mm256_fmadd_pd(av, b0, r00);
                r01 = _mm256_fmadd_pd(av, b1, r01);
                av = _mm256_broadcast_sd(a1 + ao);
                r10 = _mm256_fmadd_pd(av, b0, r10);
                r11 = _mm256_fmadd_pd(av, b1, r11);
                av = _mm256_broadcast_sd(a2 + ao);
                r20 = _mm256_fmadd_pd(av, b0, r20);
                r21 = _mm256_fmadd_pd(av, b1, r21);
                av = _mm256_broadcast_sd(a3 + ao);
                r30 = _mm256_fmadd_pd(av, b0, r30);
                r31 = _mm256_fmadd_pd(av, b1, r31);
            }
            _mm256_storeu_pd(c0 + j, r00); _mm256_storeu_pd(c0 + j + 4, r01);
            _mm256_storeu_pd(c1 + j, r10); _mm256_storeu_pd(c1 + j + 4, r11);
            _mm256_storeu_pd(c2 + j, r20); _mm256_storeu_pd(c2 + j + 4, r21);
            _mm256_storeu_pd(c3 + j, r30); _mm256_storeu_pd(c3 + j + 4, r31);
        }
        for (; j < n; ++j) {
            double s0 = accumulate ? c0[j] : 0.0;
            double s1 = accumulate ? c1[j] : 0.0;
            double s2 = accumulate ? c2[j] : 0.0;
            double s3 = accumulate ? c3[j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double bv = b[p * ldb + j];
                const std::size_t ao = p * a_cs;
                s0 = std::fma(a0[ao], bv, s0);
                s1 = std::fma(a1[ao], bv, s1);
                s2 = std::fma(a2[ao], bv, s2);
                s3 = std::fma(a3[ao], bv, s3);
            }
            c0[j] = s0; c1[j] = s1; c2[j] = s2; c3[j] = s3;
        }
    }
    for (; i < m; ++i) {
        double* crow = c + i * ldc;
        const double* arow = a + i * a_rs;
        std::size_t j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256d r0 = accumulate ? _mm256_loadu_pd(crow + j) : _mm256_setzero_pd();
            __m256d r1 = accumulate ? _mm256_loadu_pd(crow + j + 4) : _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d av = _mm256_broadcast_sd(arow + p * a_cs);
                const double* brow = b + p * ldb + j;
                r0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), r0);
                r1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), r1);
            }
            _mm256_storeu_pd(crow + j, r0);
            _mm256_storeu_pd(crow + j + 4, r1);
        }
        for (; j < n; ++j) {
            double s = accumulate ? crow[j] : 0.0;
            for (std::size_t p = 0; p < k; ++p) s = std::fma(arow[p * a_cs], b[p * ldb + j], s);
            crow[j] = s;
        }
    }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc, accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double s = dot(a + i * lda, b + j * ldb, k);
            c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
        }
}

}  // namespace neumatc::kernels::avx2
