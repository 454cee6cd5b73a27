#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "neumatc/binary_io.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/tensor.hpp"

using namespace neumatc;

namespace {

Tensor3 random_tensor(std::size_t n1, std::size_t n2, std::size_t n3, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Tensor3 t(n1, n2, n3);
    for (double& x : t.data()) x = normal(rng);
    return t;
}

}  // namespace

TEST(Mode3Unfold, SingleFiberBecomesColumn) {
    Tensor3 t(1, 1, 4, std::vector<double>{1, 2, 3, 4});
    const auto m = mode3_unfold(t);
    ASSERT_EQ(m.rows(), 4u);
    ASSERT_EQ(m.cols(), 1u);
    for (std::size_t l = 0; l < 4; ++l) EXPECT_EQ(m(l, 0), static_cast<double>(l + 1));
}

TEST(Mode3Unfold, TwoByTwoColumnMajorWithinSlice) {
    // t[:,:,0] = [[a,b],[c,d]] unfolds to (a, c, b, d).
    const double a = 1.5, b = -2.0, c = 3.25, d = 7.0;
    Tensor3 t(2, 2, 1);
    t(0, 0, 0) = a;
    t(0, 1, 0) = b;
    t(1, 0, 0) = c;
    t(1, 1, 0) = d;
    const auto m = mode3_unfold(t);
    ASSERT_EQ(m.rows(), 1u);
    ASSERT_EQ(m.cols(), 4u);
    EXPECT_EQ(m(0, 0), a);
    EXPECT_EQ(m(0, 1), c);
    EXPECT_EQ(m(0, 2), b);
    EXPECT_EQ(m(0, 3), d);

    const auto back = mode3_fold(m, 2, 2);
    EXPECT_EQ(back, t);
}

TEST(Mode3Fold, ScalarCase) {
    const auto t = mode3_fold(DenseMatrix{{4.5}}, 1, 1);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t(0, 0, 0), 4.5);
}

TEST(Mode3Fold, ShapeMismatchThrows) {
    EXPECT_THROW(mode3_fold(DenseMatrix(2, 5), 2, 2), DimensionError);
}

TEST(Mode3Fold, RoundTripRandomShapesBitExact) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> ext(1, 8);
    for (int c = 0; c < 100; ++c) {
        const auto t = random_tensor(ext(rng), ext(rng), ext(rng), rng);
        EXPECT_EQ(mode3_fold(mode3_unfold(t), t.n1(), t.n2()), t);
    }
    const auto t = random_tensor(3, 4, 5, rng);
    EXPECT_EQ(mode3_fold(mode3_unfold(t), 3, 4), t);
}

TEST(Mode3Apply, BasisVectorExtractsSlice) {
    std::mt19937_64 rng(4);
    const auto c = random_tensor(3, 2, 4, rng);
    for (std::size_t l = 0; l < 4; ++l) {
        std::vector<double> e(4, 0.0);
        e[l] = 1.0;
        EXPECT_EQ(mode3_apply(c, e), c.slice(l));
    }
}

TEST(Mode3Apply, LinearCombinationOfSlices) {
    const DenseMatrix s0{{1, 2}, {3, 4}}, s1{{-1, 0.5}, {2, 8}};
    const std::vector<DenseMatrix> slices{s0, s1};
    const auto c = Tensor3::from_slices(slices);
    const double alpha = 0.25, beta = -3.0;
    const std::vector<double> v{alpha, beta};
    const auto g = mode3_apply(c, v);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(g(i, j), alpha * s0(i, j) + beta * s1(i, j));
}

TEST(Mode3Apply, MatchesTripleLoop) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    const auto c = random_tensor(3, 3, 4, rng);
    std::vector<double> v(4);
    for (double& x : v) x = normal(rng);
    const auto g = mode3_apply(c, v);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double ref = 0.0;
            for (std::size_t l = 0; l < 4; ++l) ref += c(i, j, l) * v[l];
            EXPECT_NEAR(g(i, j), ref, 1e-14 * std::max(1.0, std::abs(ref)));
        }
}

TEST(Mode3Apply, LinearInV) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 20; ++t) {
        const auto c = random_tensor(4, 5, 6, rng);
        std::vector<double> v(6), w(6), mix(6);
        const double a = normal(rng), b = normal(rng);
        for (std::size_t l = 0; l < 6; ++l) {
            v[l] = normal(rng);
            w[l] = normal(rng);
            mix[l] = a * v[l] + b * w[l];
        }
        const auto lhs = mode3_apply(c, mix);
        const auto rhs = a * mode3_apply(c, v) + b * mode3_apply(c, w);
        EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
    }
}

TEST(Mode3Apply, LengthMismatchThrows) {
    Tensor3 c(2, 2, 3);
    const std::vector<double> v(2, 1.0);
    EXPECT_THROW(mode3_apply(c, v), DimensionError);
}

TEST(Mode3Apply, BatchRowsMatchSingleApplies) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    const auto c = random_tensor(3, 4, 5, rng);
    DenseMatrix v(6, 5);
    for (double& x : v.data()) x = normal(rng);
    const auto batch = mode3_apply_batch(c, v);
    for (std::size_t b = 0; b < 6; ++b) {
        const auto single = mode3_apply(c, v.row(b));
        for (std::size_t k = 0; k < single.size(); ++k) EXPECT_EQ(batch(b, k), single.data()[k]);
    }
}

TEST(Norms, Examples) {
    EXPECT_DOUBLE_EQ(fro_norm(DenseMatrix::identity(3)), std::sqrt(3.0));
    EXPECT_DOUBLE_EQ(l1_norm_tensor(Tensor3(2, 2, 2, 1.0)), 8.0);
    EXPECT_DOUBLE_EQ(l1_operator_norm(DenseMatrix{{1, -2}, {3, 4}}), 6.0);
    EXPECT_EQ(fro_norm(DenseMatrix(3, 2)), 0.0);
    EXPECT_EQ(l1_norm_tensor(Tensor3(2, 3, 1)), 0.0);
}

TEST(Norms, NonnegativeAndZeroOnlyForZero) {
    std::mt19937_64 rng(8);
    const auto t = random_tensor(2, 3, 4, rng);
    EXPECT_GT(fro_norm(t), 0.0);
    EXPECT_GT(l1_norm_tensor(t), 0.0);
    const auto m = mode3_unfold(t);
    EXPECT_GT(l1_operator_norm(m), 0.0);
}

TEST(DenseMatrixOps, ProductsAgreeWithTransposes) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    DenseMatrix a(5, 3), b(5, 4);
    for (double& x : a.data()) x = normal(rng);
    for (double& x : b.data()) x = normal(rng);
    EXPECT_LE(max_abs_diff(matmul_tn(a, b), matmul(a.transposed(), b)), 1e-14);
    EXPECT_LE(max_abs_diff(matmul_nt(b.transposed(), a.transposed()), matmul(b.transposed(), a)), 1e-14);
    const std::vector<double> x{1.0, -2.0, 0.5};
    const auto y = matvec(a, x);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(y[i], a(i, 0) - 2.0 * a(i, 1) + 0.5 * a(i, 2), 1e-14);
}

TEST(TensorBlob, RoundTripAndLayout) {
    std::mt19937_64 rng(10);
    const auto t = random_tensor(2, 3, 4, rng);
    ByteWriter w;
    write_tensor_blob(w, t);
    const auto& bytes = w.bytes();
    ASSERT_EQ(bytes.size(), 4u + 3 * 8 + t.size() * 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NMC1");
    EXPECT_EQ(bytes[4], 2u);   // n1, little-endian
    EXPECT_EQ(bytes[12], 3u);  // n2
    EXPECT_EQ(bytes[20], 4u);  // n3
    ByteReader r(bytes);
    EXPECT_EQ(read_tensor_blob(r), t);
}

TEST(TensorBlob, TruncatedBlobThrowsFormatError) {
    std::mt19937_64 rng(11);
    ByteWriter w;
    write_tensor_blob(w, random_tensor(2, 2, 2, rng));
    auto bytes = w.bytes();
    bytes.resize(bytes.size() - 3);
    ByteReader r(bytes);
    EXPECT_THROW(read_tensor_blob(r), FormatError);
}
