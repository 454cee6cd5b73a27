#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "neumatc/baselines.hpp"
#include "neumatc/datagen.hpp"
#include "neumatc/errors.hpp"

using namespace neumatc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("neumatc_datagen_" + name);
}

std::size_t numerical_rank(const DenseMatrix& a, double rel_tol) {
    const auto s = dense_svd(a).s;
    std::size_t r = 0;
    for (double x : s)
        if (x > rel_tol * s.front()) ++r;
    return r;
}

}  // namespace

TEST(Sinusoidal, GridsAndShapes) {
    SinusoidalGenConfig g;
    g.n = 10;
    g.r = 3;
    g.n_train = 5;
    g.n_test = 4;
    const auto gd = gen_sinusoidal(g);
    ASSERT_EQ(gd.train.size(), 5u);
    ASSERT_EQ(gd.test.size(), 4u);
    EXPECT_EQ(gd.train.params.front()[0], 0.0);
    EXPECT_EQ(gd.train.params.back()[0], 1.0);
    EXPECT_EQ(gd.train.params[2][0], 0.5);
    EXPECT_EQ(gd.test.params[0][0], 0.125);
    EXPECT_EQ(gd.test.params[3][0], 0.875);
    EXPECT_EQ(gd.train.kind.op, OpKind::Inverse);
    EXPECT_EQ(gd.train.metadata.at("generator"), "sinusoidal");
    EXPECT_EQ(operand_rows(gd.train.inputs[0]), 10u);
    EXPECT_THROW(gen_sinusoidal({.n = 4, .r = 0}), ArgumentError);
    EXPECT_THROW(gen_sinusoidal({.n = 2, .r = 3}), ArgumentError);
}

TEST(Sinusoidal, ShiftedLowRankStructure) {
    SinusoidalGenConfig g;
    g.n = 12;
    g.r = 3;
    g.eps = 1e-3;
    g.n_train = 6;
    g.n_test = 6;
    const auto gd = gen_sinusoidal(g);
    const double eps = std::stod(gd.train.metadata.at("eps_absolute"));
    double max_norm = 0.0;
    for (const auto* ds : {&gd.train, &gd.test})
        for (const auto& a : ds->inputs) {
            const DenseMatrix low = operand_dense(a) - eps * DenseMatrix::identity(12);
            EXPECT_EQ(numerical_rank(low, 1e-10), 3u);
            max_norm = std::max(max_norm, dense_svd(low).s.front());
        }
    // The absolute shift is eps times the largest ||A B^T||_2 over both grids.
    EXPECT_NEAR(eps, 1e-3 * max_norm, 1e-12 * eps);
}

TEST(Sinusoidal, AbsoluteShiftAndDeterminism) {
    SinusoidalGenConfig g;
    g.n = 6;
    g.r = 2;
    g.eps = 0.25;
    g.eps_relative = false;
    g.seed = 9;
    const auto a = gen_sinusoidal(g);
    const auto b = gen_sinusoidal(g);
    EXPECT_EQ(a.train.metadata.at("eps_absolute"), "0.25");
    for (std::size_t j = 0; j < a.train.size(); ++j) EXPECT_EQ(a.train.inputs[j], b.train.inputs[j]);
    g.seed = 10;
    EXPECT_NE(gen_sinusoidal(g).train.inputs[3], a.train.inputs[3]);
}

TEST(Sinusoidal, SymmetricVariantIsSpd) {
    SinusoidalGenConfig g;
    g.n = 8;
    g.r = 3;
    g.eps = 0.1;
    g.symmetric = true;
    auto gd = gen_sinusoidal(g);
    for (const auto& in : gd.train.inputs) {
        const DenseMatrix a = operand_dense(in);
        EXPECT_EQ(a, a.transposed());
        EXPECT_NO_THROW(cholesky(a));
    }
}

TEST(Sinusoidal, SharedColumnLayoutEntriesShareFrequency) {
    // With one frequency per column the entries of A(p) B(p)^T are
    // trigonometric polynomials in p with at most 4r distinct frequencies, so
    // the stacked samples have rank <= 4r + 1 regardless of n.
    SinusoidalGenConfig g;
    g.n = 30;
    g.r = 2;
    g.layout = FrequencyLayout::SharedColumn;
    g.n_train = 60;
    const auto gd = gen_sinusoidal(g);
    DenseMatrix stack(gd.train.size(), 30 * 30);
    for (std::size_t j = 0; j < gd.train.size(); ++j) {
        const DenseMatrix a = operand_dense(gd.train.inputs[j]);
        std::copy(a.data().begin(), a.data().end(), stack.data().begin() + static_cast<std::ptrdiff_t>(j * 900));
    }
    EXPECT_LE(numerical_rank(stack, 1e-9), 4 * g.r + 1);
}

TEST(ControlledRank, FactorsHaveParametricRankD) {
    ControlledRankGenConfig c;
    c.n = 12;
    c.r = 12;
    c.d = 4;
    ControlledRankSource src(c);
    DenseMatrix u_stack(50, 144);
    for (int j = 0; j < 50; ++j) {
        const auto f = src.factors(j / 49.0);
        std::copy(f.u.data().begin(), f.u.data().end(), u_stack.data().begin() + j * 144);
        // The source matrix is exactly U diag(s) V^T.
        const DenseMatrix h = matmul_nt(matmul(f.u, DenseMatrix::diagonal(f.s)), f.v);
        const std::vector<double> p{j / 49.0};
        EXPECT_LT(max_abs_diff(h, operand_dense(src.at(p))), 1e-12);
    }
    const auto sv = dense_svd(u_stack).s;
    EXPECT_GT(sv[3] / sv[0], 1e-6);
    EXPECT_LT(sv[4] / sv[0], 1e-10);
}

TEST(ControlledRank, BasisIsNormalized) {
    ControlledRankGenConfig c;
    c.n = 6;
    c.r = 3;
    c.d = 5;
    ControlledRankSource src(c);
    for (double p : {0.0, 0.37, 1.0}) {
        const auto phi = src.basis(p);
        ASSERT_EQ(phi.size(), 5u);
        double sum = 0.0, sq = 0.0;
        for (double x : phi) {
            EXPECT_GT(x, 0.0);
            sum += x;
            sq += x * x;
        }
        EXPECT_TRUE(std::abs(sum - 1.0) < 1e-12 || std::abs(sq - 1.0) < 1e-12);
    }
    const std::vector<double> p{0.4};
    EXPECT_EQ(numerical_rank(operand_dense(src.at(p)), 1e-10), 3u);
}

TEST(ControlledRank, SingleBasisFunction) {
    ControlledRankGenConfig c;
    c.n = 5;
    c.r = 5;
    c.d = 1;
    ControlledRankSource src(c);
    const auto a = src.factors(0.1), b = src.factors(0.9);
    EXPECT_LT(max_abs_diff(a.u, b.u), 1e-12);
    EXPECT_THROW(ControlledRankSource({.n = 4, .r = 5}), ArgumentError);
}

TEST(Fourier2d, SymmetricPositiveDefiniteAndSplit) {
    Fourier2dGenConfig f;
    f.n = 6;
    f.m = 4;
    f.grid = 10;
    f.train_fraction = 0.2;
    f.n_test = 30;
    const auto gd = gen_2d_fourier(f);
    EXPECT_EQ(gd.train.size(), 20u);
    EXPECT_EQ(gd.test.size(), 30u);
    EXPECT_EQ(gd.train.domain.dim(), 2u);
    for (const auto& p : gd.train.params) {
        for (double x : p) EXPECT_NEAR(x * 9.0, std::round(x * 9.0), 1e-12);
        for (const auto& q : gd.test.params) EXPECT_NE(p, q);
    }
    for (const auto& in : gd.train.inputs) {
        const DenseMatrix a = operand_dense(in);
        EXPECT_EQ(a, a.transposed());
        EXPECT_NO_THROW(cholesky(a));
    }
    EXPECT_THROW(gen_2d_fourier({.grid = 3, .n_test = 100}), ArgumentError);
}

TEST(Fourier2d, ConstantOnlyGivesOneMatrix) {
    Fourier2dGenConfig f;
    f.n = 4;
    f.m = 3;
    f.constant_only = true;
    f.grid = 6;
    f.train_fraction = 0.3;
    f.n_test = 10;
    const auto gd = gen_2d_fourier(f);
    for (const auto& in : gd.test.inputs) EXPECT_EQ(operand_dense(in), operand_dense(gd.train.inputs[0]));
}

TEST(Adr, MatchesIndependentStencil) {
    const std::size_t g = 3;
    const double adv = 2.0;
    const auto as = assemble_adr_operators(g, adv);
    const double h = 1.0 / 4.0;
    for (double p : {0.0, 0.3}) {
        const double vx = adv * std::cos(kTwoPi * p), vy = adv * std::sin(kTwoPi * p);
        DenseMatrix ref(9, 9);
        for (std::size_t y = 0; y < g; ++y)
            for (std::size_t x = 0; x < g; ++x) {
                const std::size_t r = y * g + x;
                ref(r, r) = 4.0 / (h * h) + 1.0;
                if (x > 0) ref(r, r - 1) = -1.0 / (h * h) - vx / (2 * h);
                if (x + 1 < g) ref(r, r + 1) = -1.0 / (h * h) + vx / (2 * h);
                if (y > 0) ref(r, r - g) = -1.0 / (h * h) - vy / (2 * h);
                if (y + 1 < g) ref(r, r + g) = -1.0 / (h * h) + vy / (2 * h);
            }
        EXPECT_LT(max_abs_diff(as.at(p).to_dense(), ref), 1e-12);
    }
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(as.a1.at(i, i), 0.0);
        EXPECT_EQ(as.a2.at(i, i), 0.0);
    }
    EXPECT_EQ(as.b, std::vector<double>(9, 1.0));
    EXPECT_THROW(assemble_adr_operators(2, 1.0), ArgumentError);
}

TEST(Adr, DecompositionIdentityAndPeriodicity) {
    const auto as = assemble_adr_operators(6, 50.0);
    const DenseMatrix a0 = as.a0.to_dense(), a1 = as.a1.to_dense(), a2 = as.a2.to_dense();
    for (int j = 0; j < 100; ++j) {
        const double p = j / 100.0;
        const DenseMatrix ref = a0 + std::cos(kTwoPi * p) * a1 + std::sin(kTwoPi * p) * a2;
        EXPECT_LE(max_abs_diff(as.at(p).to_dense(), ref), 1e-12 * fro_norm(ref));
    }
    EXPECT_LT(max_abs_diff(as.at(0.0).to_dense(), as.at(1.0).to_dense()), 1e-9);
    // A1 and A2 are skew-symmetric, A0 symmetric.
    EXPECT_EQ(a1, -1.0 * a1.transposed());
    EXPECT_EQ(a2, -1.0 * a2.transposed());
    EXPECT_EQ(a0, a0.transposed());
}

TEST(Adr, SplitByStride) {
    const auto gd = assemble_adr({.g = 4, .advection = 10.0, .count = 20, .train_stride = 4});
    EXPECT_EQ(gd.train.size(), 5u);
    EXPECT_EQ(gd.test.size(), 15u);
    EXPECT_EQ(gd.train.kind.op, OpKind::LinSolve);
    EXPECT_EQ(gd.train.params[1][0], 0.2);
    EXPECT_EQ(gd.train.rhs.size(), 16u);
    EXPECT_TRUE(std::holds_alternative<SparseCsr>(gd.train.inputs[0]));
}

TEST(AlignSvd, FixedPointAndSignFlip) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    DenseMatrix a(5, 4);
    for (double& x : a.data()) x = nd(rng);
    const auto s = dense_svd(a);
    const SvdFactors f{s.u, s.s, s.v};
    auto same = align_svd_sequence({f, f});
    EXPECT_EQ(same[1].u, f.u);

    SvdFactors flipped = f;
    for (std::size_t i = 0; i < 5; ++i) flipped.u(i, 1) = -flipped.u(i, 1);
    for (std::size_t i = 0; i < 4; ++i) flipped.v(i, 1) = -flipped.v(i, 1);
    const auto fixed = align_svd_sequence({f, flipped});
    EXPECT_EQ(fixed[1].u, f.u);
    EXPECT_EQ(fixed[1].v, f.v);
}

TEST(AlignSvd, CrossingIsUndone) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    DenseMatrix a(6, 3);
    for (double& x : a.data()) x = nd(rng);
    const auto s = dense_svd(a);
    const SvdFactors f{s.u, s.s, s.v};
    // Columns 0 and 2 swapped (as happens when singular values cross).
    SvdFactors swapped = f;
    std::swap(swapped.s[0], swapped.s[2]);
    for (std::size_t i = 0; i < 6; ++i) std::swap(swapped.u(i, 0), swapped.u(i, 2));
    for (std::size_t i = 0; i < 3; ++i) std::swap(swapped.v(i, 0), swapped.v(i, 2));
    const auto out = align_svd_sequence({f, swapped});
    EXPECT_EQ(out[1].s, f.s);
    EXPECT_EQ(out[1].u, f.u);
    // Without permutation the order is kept; reconstruction is unchanged either way.
    const auto kept = align_svd_sequence({f, swapped}, false);
    EXPECT_EQ(kept[1].s, swapped.s);
    const auto rec = [](const SvdFactors& x) { return matmul_nt(matmul(x.u, DenseMatrix::diagonal(x.s)), x.v); };
    EXPECT_LT(max_abs_diff(rec(kept[1]), a), 1e-12);
    EXPECT_LT(max_abs_diff(rec(out[1]), a), 1e-12);
}

TEST(ComputeTargets, ResidualsPerKind) {
    SinusoidalGenConfig g;
    g.n = 6;
    g.r = 2;
    g.eps = 0.2;
    g.symmetric = true;
    g.n_train = 5;
    g.n_test = 1;
    const auto base = gen_sinusoidal(g);
    for (auto kind : {OperationKind{OpKind::Inverse}, OperationKind{OpKind::Svd}, OperationKind{OpKind::Svd, 2},
                      OperationKind{OpKind::Qr}, OperationKind{OpKind::Cholesky}, OperationKind{OpKind::Expm}}) {
        auto ds = base.train;
        ds.kind = kind;
        compute_targets(ds);
        ASSERT_EQ(ds.targets.size(), 5u);
        for (std::size_t j = 0; j < 5; ++j) {
            const auto rs = structure_residual(kind, ds.inputs[j], ds.targets[j]);
            if (kind.op == OpKind::Svd && kind.rank == 2) {
                EXPECT_LT(fro_norm(rs.blocks[1].value), 1e-10);
                EXPECT_LT(fro_norm(rs.blocks[2].value), 1e-10);
            } else {
                EXPECT_LT(std::sqrt(rs.squared_fro_total), 1e-10) << op_name(kind.op);
            }
        }
    }
}

TEST(ComputeTargets, SvdTargetsAreAligned) {
    ControlledRankGenConfig c;
    c.n = 8;
    c.r = 8;
    c.n_train = 30;
    auto gd = gen_controlled_rank(c);
    gd.train.kind = {OpKind::Svd, 3};
    compute_targets(gd.train);
    for (std::size_t j = 1; j < gd.train.size(); ++j) {
        const DenseMatrix overlap = matmul_tn(gd.train.targets[j - 1][0], gd.train.targets[j][0]);
        for (std::size_t k = 0; k < 3; ++k) EXPECT_GE(overlap(k, k), 0.0);
    }
}

TEST(ComputeTargets, LinSolveSparseAndFailures) {
    auto gd = assemble_adr({.g = 5, .advection = 5.0, .count = 10, .train_stride = 5});
    compute_targets(gd.train);
    for (std::size_t j = 0; j < gd.train.size(); ++j) {
        const auto rs = structure_residual(gd.train.kind, gd.train.inputs[j], gd.train.targets[j], gd.train.rhs);
        EXPECT_LT(std::sqrt(rs.squared_fro_total), 1e-9);
    }
    ParametricDataset bad;
    bad.kind = {OpKind::Cholesky};
    bad.domain = ParamDomain::unit(1);
    bad.params = {{0.0}, {0.5}, {1.0}};
    bad.inputs = {DenseMatrix::identity(2), DenseMatrix{{1.0, 0.0}, {0.0, -1.0}}, DenseMatrix::identity(2)};
    try {
        compute_targets(bad);
        FAIL() << "expected TargetError";
    } catch (const TargetError& e) {
        EXPECT_EQ(e.failed_indices(), std::vector<std::size_t>{1});
    }
}

TEST(Oracle, InversesLieInSineSpan) {
    OracleGenConfig oc;
    oc.n = 5;
    oc.d = 3;
    auto gd = gen_oracle(oc);
    compute_targets(gd.train);
    for (std::size_t j = 0; j < gd.train.size(); ++j)
        EXPECT_EQ(operand_dense(gd.train.inputs[j]), operand_dense(gd.source->at(gd.train.params[j])));
    // Inverses are I + sin(pi p) S1 + sin(2 pi p) S2: three slices.
    DenseMatrix stack(gd.train.size(), 25);
    for (std::size_t j = 0; j < gd.train.size(); ++j)
        std::copy(gd.train.targets[j][0].data().begin(), gd.train.targets[j][0].data().end(),
                  stack.data().begin() + static_cast<std::ptrdiff_t>(j * 25));
    EXPECT_EQ(numerical_rank(stack, 1e-10), 3u);
}

TEST(SequenceFiles, RoundTripDenseAndSparse) {
    SinusoidalGenConfig g;
    g.n = 4;
    g.r = 2;
    g.n_train = 3;
    auto gd = gen_sinusoidal(g);
    gd.train.kind = {OpKind::Svd, 2};
    compute_targets(gd.train);
    const auto seq = temp_file("dense.nms"), tgt = temp_file("dense.nmt");
    save_sequence(gd.train, seq);
    save_targets(gd.train, tgt);
    auto back = load_sequence(seq);
    EXPECT_EQ(back.kind, gd.train.kind);
    EXPECT_EQ(back.params, gd.train.params);
    EXPECT_EQ(back.inputs, gd.train.inputs);
    load_targets(back, tgt);
    EXPECT_EQ(back.targets, gd.train.targets);

    auto adr = assemble_adr({.g = 3, .advection = 1.0, .count = 4, .train_stride = 2});
    const auto sp = temp_file("sparse.nms");
    save_sequence(adr.train, sp);
    const auto adr_back = load_sequence(sp);
    EXPECT_EQ(adr_back.inputs, adr.train.inputs);
    EXPECT_EQ(adr_back.rhs, adr.train.rhs);
    std::filesystem::remove(seq);
    std::filesystem::remove(tgt);
    std::filesystem::remove(sp);
}

TEST(SequenceFiles, CorruptionIsReported) {
    SinusoidalGenConfig g;
    g.n = 4;
    g.r = 2;
    g.n_train = 3;
    auto gd = gen_sinusoidal(g);
    const auto path = temp_file("trunc.nms");
    save_sequence(gd.train, path);
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 9);
    try {
        load_sequence(path);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
    }
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << "NOPE";
    }
    EXPECT_THROW(load_sequence(path), FormatError);
    std::filesystem::remove(path);

    compute_targets(gd.train);
    const auto tgt = temp_file("count.nmt");
    save_targets(gd.train, tgt);
    auto other = gd.train;
    other.params.pop_back();
    other.inputs.pop_back();
    EXPECT_THROW(load_targets(other, tgt), FormatError);
    std::filesystem::remove(tgt);
}

TEST(SequenceSource, InterpolatesLinearly) {
    ParametricDataset ds;
    ds.kind = {OpKind::Inverse};
    ds.domain = ParamDomain::unit(1);
    ds.params = {{1.0}, {0.0}};
    ds.inputs = {DenseMatrix{{3.0}}, DenseMatrix{{1.0}}};
    const SequenceSource src(ds);
    const std::vector<double> mid{0.25}, beyond{2.0};
    EXPECT_DOUBLE_EQ(operand_dense(src.at(mid))(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(operand_dense(src.at(beyond))(0, 0), 3.0);
}

TEST(Normalization, MeanTrainingNormIsOne) {
    SinusoidalGenConfig g;
    g.n = 5;
    g.r = 2;
    g.n_train = 7;
    auto gd = gen_sinusoidal(g);
    const auto raw = operand_dense(gd.test.inputs[0]);
    const double f = normalize_inputs(gd);
    double mean = 0.0;
    for (const auto& in : gd.train.inputs) mean += fro_norm(operand_dense(in));
    EXPECT_NEAR(mean / 7.0, 1.0, 1e-12);
    EXPECT_LT(max_abs_diff(operand_dense(gd.test.inputs[0]), f * raw), 1e-14);
    EXPECT_LT(max_abs_diff(operand_dense(gd.source->at(gd.test.params[0])), f * raw), 1e-14);
    EXPECT_EQ(std::stod(gd.train.metadata.at("input_scale")), f);
}
