#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "neumatc/kernels.hpp"
#include "neumatc/tensor.hpp"

using namespace neumatc;
using kernels::Isa;

namespace {

std::vector<double> randn(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

// Independent reference for C = A B with leading dimensions.
void naive_gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, bool a_t,
                const double* b, std::size_t ldb, bool b_t, double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double s = 0.0L;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a_t ? a[p * lda + i] : a[i * lda + p];
                const double bv = b_t ? b[j * ldb + p] : b[p * ldb + j];
                s += static_cast<long double>(av) * bv;
            }
            c[i * ldc + j] = static_cast<double>(s);
        }
}

class KernelEquivalence : public ::testing::Test {
protected:
    void SetUp() override {
        if (!kernels::avx2_table() || !kernels::isa_supported(Isa::Avx2)) GTEST_SKIP() << "no AVX2 on this host";
    }
};

}  // namespace

TEST(Kernels, ScalarTableAlwaysAvailable) {
    EXPECT_EQ(kernels::scalar_table().isa, Isa::Scalar);
    EXPECT_TRUE(kernels::isa_supported(Isa::Scalar));
    EXPECT_EQ(kernels::parse_isa("scalar"), Isa::Scalar);
    EXPECT_EQ(kernels::parse_isa("avx2"), Isa::Avx2);
}

TEST(Kernels, ScopedIsaRestoresSelection) {
    const Isa before = kernels::active().isa;
    {
        kernels::ScopedIsa guard(Isa::Scalar);
        EXPECT_EQ(kernels::active().isa, Isa::Scalar);
    }
    EXPECT_EQ(kernels::active().isa, before);
}

TEST(Kernels, ScalarGemmMatchesNaive) {
    std::mt19937_64 rng(1);
    const auto& t = kernels::scalar_table();
    for (std::size_t m : {1u, 3u, 7u, 16u})
        for (std::size_t n : {1u, 5u, 9u})
            for (std::size_t k : {1u, 4u, 13u}) {
                const auto a = randn(m * k, rng), b = randn(k * n, rng);
                std::vector<double> c(m * n), ref(m * n);
                t.gemm_nn(m, n, k, a.data(), k, b.data(), n, c.data(), n, false);
                naive_gemm(m, n, k, a.data(), k, false, b.data(), n, false, ref.data(), n);
                for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], ref[i], 1e-13 * (1.0 + std::abs(ref[i])));
            }
}

TEST(Kernels, ScalarGemmAccumulates) {
    std::mt19937_64 rng(2);
    const auto& t = kernels::scalar_table();
    const auto a = randn(12, rng), b = randn(12, rng);
    std::vector<double> c(9, 1.0), ref(9);
    t.gemm_nt(3, 3, 4, a.data(), 4, b.data(), 4, c.data(), 3, true);
    naive_gemm(3, 3, 4, a.data(), 4, false, b.data(), 4, true, ref.data(), 3);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(c[i], ref[i] + 1.0, 1e-13);
}

TEST_F(KernelEquivalence, VectorKernelsAgree) {
    std::mt19937_64 rng(3);
    const auto& s = kernels::scalar_table();
    const auto& v = *kernels::avx2_table();
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 17u, 64u, 1001u}) {
        const auto a = randn(n, rng), b = randn(n, rng);
        const double scale = 1e-14 * (1.0 + static_cast<double>(n));
        EXPECT_NEAR(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n), scale);
        EXPECT_NEAR(s.sum_squares(a.data(), n), v.sum_squares(a.data(), n), scale * (1.0 + n));
        EXPECT_NEAR(s.sum_sq_diff(a.data(), b.data(), n), v.sum_sq_diff(a.data(), b.data(), n), scale * (1.0 + n));
        auto y1 = b, y2 = b;
        s.axpy(0.7, a.data(), y1.data(), n);
        v.axpy(0.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15 * (1.0 + std::abs(y1[i])));
    }
}

TEST_F(KernelEquivalence, GemmVariantsAgreeAcrossShapes) {
    std::mt19937_64 rng(4);
    const auto& s = kernels::scalar_table();
    const auto& v = *kernels::avx2_table();
    for (std::size_t m : {1u, 2u, 5u, 8u, 33u})
        for (std::size_t n : {1u, 3u, 4u, 7u, 40u})
            for (std::size_t k : {1u, 6u, 19u}) {
                const auto a = randn(m * k, rng), b = randn(k * n, rng), bt = randn(n * k, rng);
                const auto c0 = randn(m * n, rng);
                for (bool acc : {false, true}) {
                    auto c1 = c0, c2 = c0;
                    s.gemm_nn(m, n, k, a.data(), k, b.data(), n, c1.data(), n, acc);
                    v.gemm_nn(m, n, k, a.data(), k, b.data(), n, c2.data(), n, acc);
                    for (std::size_t i = 0; i < c1.size(); ++i)
                        EXPECT_NEAR(c1[i], c2[i], 1e-13 * (1.0 + std::abs(c1[i])));
                    c1 = c0;
                    c2 = c0;
                    // a viewed as k x m for the transposed product.
                    s.gemm_tn(m, n, k, a.data(), m, b.data(), n, c1.data(), n, acc);
                    v.gemm_tn(m, n, k, a.data(), m, b.data(), n, c2.data(), n, acc);
                    for (std::size_t i = 0; i < c1.size(); ++i)
                        EXPECT_NEAR(c1[i], c2[i], 1e-13 * (1.0 + std::abs(c1[i])));
                    c1 = c0;
                    c2 = c0;
                    s.gemm_nt(m, n, k, a.data(), k, bt.data(), k, c1.data(), n, acc);
                    v.gemm_nt(m, n, k, a.data(), k, bt.data(), k, c2.data(), n, acc);
                    for (std::size_t i = 0; i < c1.size(); ++i)
                        EXPECT_NEAR(c1[i], c2[i], 1e-13 * (1.0 + std::abs(c1[i])));
                }
            }
}

TEST_F(KernelEquivalence, Avx2GemmIndependentOfBlocking) {
    // Each output element is one FMA chain, so a row computed alone equals
    // the same row inside a larger product bit for bit.
    std::mt19937_64 rng(5);
    const auto& v = *kernels::avx2_table();
    const std::size_t m = 37, n = 29, k = 23;
    const auto a = randn(m * k, rng), b = randn(k * n, rng);
    std::vector<double> full(m * n), row(n);
    v.gemm_nn(m, n, k, a.data(), k, b.data(), n, full.data(), n, false);
    for (std::size_t i = 0; i < m; ++i) {
        v.gemm_nn(1, n, k, a.data() + i * k, k, b.data(), n, row.data(), n, false);
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(row[j], full[i * n + j]);
    }
}

TEST_F(KernelEquivalence, MatmulThroughBothIsas) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    DenseMatrix a(20, 30), b(30, 10);
    for (double& x : a.data()) x = normal(rng);
    for (double& x : b.data()) x = normal(rng);
    DenseMatrix r1, r2;
    {
        kernels::ScopedIsa g(Isa::Scalar);
        r1 = matmul(a, b);
    }
    {
        kernels::ScopedIsa g(Isa::Avx2);
        r2 = matmul(a, b);
    }
    EXPECT_LE(max_abs_diff(r1, r2), 1e-12);
}
