#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>

#include "neumatc/binary_io.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/model.hpp"

using namespace neumatc;

namespace {

ModelInitConfig small_config(std::uint64_t seed, std::size_t d = 4) {
    ModelInitConfig mc;
    mc.d = {d};
    mc.net.depth = 3;
    mc.net.width = 8;
    mc.seed = seed;
    return mc;
}

NeuMatCModel random_model(const OperationKind& kind, std::size_t rows, std::size_t cols, std::uint64_t seed) {
    return init_model(kind, rows, cols, ParamDomain::unit(1), small_config(seed));
}

std::vector<std::vector<double>> grid(std::size_t n) {
    std::vector<std::vector<double>> ps;
    for (std::size_t i = 0; i < n; ++i) ps.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(n)});
    return ps;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("neumatc_test_" + name);
}

}  // namespace

TEST(ComponentShapes, PerKind) {
    auto s = component_shapes({OpKind::Inverse}, 5, 5);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].n1, 5u);
    s = component_shapes({OpKind::Svd, 3}, 6, 4);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].n1, 6u);
    EXPECT_EQ(s[0].n2, 3u);
    EXPECT_EQ(s[1].n1, 3u);
    EXPECT_EQ(s[1].n2, 1u);
    EXPECT_EQ(s[1].structure, Structure::Abs);
    EXPECT_EQ(s[2].n1, 4u);
    s = component_shapes({OpKind::Svd}, 6, 4);
    EXPECT_EQ(s[0].n2, 4u);
    s = component_shapes({OpKind::Qr}, 6, 4);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].structure, Structure::Upper);
    EXPECT_EQ(s[1].n1, 4u);
    s = component_shapes({OpKind::Cholesky}, 4, 4);
    EXPECT_EQ(s[0].structure, Structure::LowerSoftplus);
    s = component_shapes({OpKind::LinSolve}, 7, 7);
    EXPECT_EQ(s[0].n2, 1u);
    EXPECT_THROW(component_shapes({OpKind::Inverse}, 4, 5), DimensionError);
    EXPECT_THROW(component_shapes({OpKind::Svd, 5}, 6, 4), DimensionError);
}

TEST(OpNames, RoundTrip) {
    for (auto k : {OpKind::Inverse, OpKind::Svd, OpKind::Qr, OpKind::Cholesky, OpKind::Expm, OpKind::LinSolve})
        EXPECT_EQ(parse_op(op_name(k)), k);
    EXPECT_THROW(parse_op("eig"), ArgumentError);
}

TEST(Predict, ZeroLatentGivesZero) {
    auto m = random_model({OpKind::Inverse}, 3, 3, 1);
    for (auto& c : m.components()) std::fill(c.latent.data().begin(), c.latent.data().end(), 0.0);
    for (const auto& p : grid(5)) {
        const auto pred = predict(m, p);
        for (double x : pred.components[0].data()) EXPECT_EQ(x, 0.0);
    }
}

TEST(Predict, ConstantNetReturnsFirstSlice) {
    // Net with zero weights and bias e_1 outputs the first basis vector for all p.
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    Tensor3 c(3, 3, 2);
    for (double& x : c.data()) x = normal(rng);
    Mlp net({Layer{DenseMatrix(2, 1), {1.0, 0.0}}}, 1.0, Activation::Sine);
    NeuMatCModel m({OpKind::Inverse}, 3, 3, ParamDomain::unit(1), {Component{{3, 3}, c, net}});
    for (const auto& p : grid(7)) EXPECT_EQ(predict(m, p).components[0], c.slice(0));
}

TEST(Predict, RankTwoFamilyReproducedAfterFit) {
    // G(p) = phi_1(p) S_1 + phi_2(p) S_2 with phi the sine basis; fitting C
    // by least squares against the frozen net reproduces G off-sample.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    DenseMatrix s1(4, 4), s2(4, 4);
    for (double& x : s1.data()) x = normal(rng);
    for (double& x : s2.data()) x = normal(rng);
    const auto family = [&](double p) {
        return std::sin(std::numbers::pi * p) * s1 + std::sin(2.0 * std::numbers::pi * p) * s2;
    };
    NeuMatCModel m({OpKind::Inverse}, 4, 4, ParamDomain::unit(1),
                   {Component{{4, 4}, Tensor3(4, 4, 2), sine_basis_net(2)}});
    const auto train = grid(6);
    std::vector<std::vector<DenseMatrix>> targets;
    for (const auto& p : train) targets.push_back({family(p[0])});
    const auto rep = refit_latents(m, train, targets);
    EXPECT_FALSE(rep.underdetermined);
    for (int t = 0; t < 10; ++t) {
        const double p = 0.05 + 0.1 * t;
        const std::vector<double> x{p};
        EXPECT_LE(max_abs_diff(predict(m, x).components[0], family(p)), 1e-12);
    }
}

TEST(Predict, NonFiniteThrowsAndOutOfDomainFlagged) {
    const auto m = random_model({OpKind::Inverse}, 3, 3, 4);
    const std::vector<double> nan{std::numeric_limits<double>::quiet_NaN()};
    EXPECT_THROW(predict(m, nan), DomainError);
    const std::vector<double> out{1.5}, in{0.5};
    EXPECT_TRUE(predict(m, out).out_of_domain);
    EXPECT_FALSE(predict(m, in).out_of_domain);
}

TEST(PredictBatch, BitIdenticalToPointwise) {
    for (const OperationKind kind : {OperationKind{OpKind::Inverse}, OperationKind{OpKind::Svd, 3},
                                     OperationKind{OpKind::Qr}, OperationKind{OpKind::Cholesky},
                                     OperationKind{OpKind::LinSolve}}) {
        const std::size_t cols = kind.op == OpKind::Svd || kind.op == OpKind::Qr ? 4 : 5;
        const auto m = random_model(kind, 5, cols, 5);
        const auto ps = grid(100);
        const auto batch = predict_batch(m, ps);
        ASSERT_EQ(batch.size(), ps.size());
        for (std::size_t j = 0; j < ps.size(); ++j) {
            const auto single = predict(m, ps[j]);
            ASSERT_EQ(single.components.size(), batch[j].components.size());
            for (std::size_t c = 0; c < single.components.size(); ++c)
                EXPECT_EQ(single.components[c], batch[j].components[c]);
        }
        EXPECT_EQ(predict_batch(m, std::vector<std::vector<double>>{ps[3]})[0].components,
                  predict(m, ps[3]).components);
    }
    const auto m = random_model({OpKind::Inverse}, 3, 3, 6);
    EXPECT_TRUE(predict_batch(m, {}).empty());
}

TEST(Predict, StructuralPostProcessing) {
    // Svd: S nonnegative and descending; Qr: R upper; Cholesky: L lower with positive diagonal.
    const auto svd = random_model({OpKind::Svd, 4}, 6, 5, 7);
    const auto qr = random_model({OpKind::Qr}, 6, 4, 7);
    const auto chol = random_model({OpKind::Cholesky}, 5, 5, 7);
    for (const auto& p : grid(20)) {
        const auto s = predict(svd, p).components[1];
        for (std::size_t i = 0; i < s.rows(); ++i) {
            EXPECT_GE(s(i, 0), 0.0);
            if (i > 0) {
                EXPECT_GE(s(i - 1, 0), s(i, 0));
            }
        }
        const auto r = predict(qr, p).components[1];
        for (std::size_t i = 0; i < r.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(r(i, j), 0.0);
        const auto l = predict(chol, p).components[0];
        for (std::size_t i = 0; i < l.rows(); ++i) {
            EXPECT_GT(l(i, i), 0.0);
            for (std::size_t j = i + 1; j < l.cols(); ++j) EXPECT_EQ(l(i, j), 0.0);
        }
    }
}

TEST(Predict, SvdReorderingPermutesFactorsJointly) {
    // predict sorts S; U diag(S) V^T must be the same as for the unsorted evaluate.
    const auto m = random_model({OpKind::Svd, 4}, 6, 5, 8);
    for (const auto& p : grid(10)) {
        const auto raw = evaluate(m, p);
        const auto pred = predict(m, p).components;
        const auto recon = [](const std::vector<DenseMatrix>& g) {
            DenseMatrix us = g[0];
            for (std::size_t i = 0; i < us.rows(); ++i)
                for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= g[1](k, 0);
            return matmul_nt(us, g[2]);
        };
        EXPECT_LE(max_abs_diff(recon(raw), recon(pred)), 1e-13);
    }
}

TEST(InitModel, RejectsZeroD) {
    EXPECT_THROW(init_model({OpKind::Inverse}, 3, 3, ParamDomain::unit(1), small_config(1, 0)), DimensionError);
}

TEST(InitModel, SameSeedBitIdentical) {
    EXPECT_EQ(random_model({OpKind::Svd, 2}, 4, 4, 9), random_model({OpKind::Svd, 2}, 4, 4, 9));
    EXPECT_FALSE(random_model({OpKind::Svd, 2}, 4, 4, 9) == random_model({OpKind::Svd, 2}, 4, 4, 10));
}

TEST(InitModel, WarmStartRecoversSpannedTargets) {
    // Targets G(p) = C* x_3 Phi_init(p) lie in the span of the init features.
    auto cfg = small_config(11, 5);
    const auto probe = init_model({OpKind::Inverse}, 4, 4, ParamDomain::unit(1), cfg);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal;
    Tensor3 truth(4, 4, 5);
    for (double& x : truth.data()) x = normal(rng);
    const auto ps = grid(12);
    std::vector<std::vector<DenseMatrix>> targets;
    for (const auto& p : ps) targets.push_back({mode3_apply(truth, probe.components()[0].net.forward(p))});
    cfg.latent = LatentInit::WarmStart;
    InitReport rep;
    const auto m = init_model({OpKind::Inverse}, 4, 4, ParamDomain::unit(1), cfg, ps, targets, &rep);
    EXPECT_FALSE(rep.underdetermined);
    for (std::size_t j = 0; j < ps.size(); ++j) EXPECT_LE(max_abs_diff(evaluate(m, ps[j])[0], targets[j][0]), 1e-8);
    for (std::size_t i = 0; i < truth.size(); ++i)
        EXPECT_NEAR(m.components()[0].latent.data()[i], truth.data()[i], 1e-6);
}

TEST(InitModel, UnderdeterminedFlagged) {
    auto cfg = small_config(13, 6);
    cfg.latent = LatentInit::WarmStart;
    const auto ps = grid(3);
    std::vector<std::vector<DenseMatrix>> targets(3, {DenseMatrix::identity(3)});
    InitReport rep;
    init_model({OpKind::Inverse}, 3, 3, ParamDomain::unit(1), cfg, ps, targets, &rep);
    EXPECT_TRUE(rep.underdetermined);
}

TEST(InitModel, NearlyCollinearFeaturesFallBackToRidge) {
    // Phi(p) = (p, (1 + 1e-10) p) with a target outside the span: the plain
    // least-squares latents would be of order 1e7 and cancel.
    Mlp net({Layer{DenseMatrix{{1.0}, {1.0 + 1e-10}}, {0.0, 0.0}}}, 1.0, Activation::Sine);
    NeuMatCModel m({OpKind::Inverse}, 1, 1, ParamDomain::unit(1), {Component{{1, 1}, Tensor3(1, 1, 2), net}});
    const auto ps = grid(10);
    std::vector<std::vector<DenseMatrix>> targets;
    for (const auto& p : ps) targets.push_back({DenseMatrix{{p[0] + 1e-3 * std::sin(7.0 * p[0])}}});
    const auto rep = refit_latents(m, ps, targets);
    EXPECT_TRUE(rep.regularized);
    for (double c : m.components()[0].latent.data()) EXPECT_LT(std::abs(c), 10.0);
    for (std::size_t j = 0; j < ps.size(); ++j) EXPECT_LE(max_abs_diff(evaluate(m, ps[j])[0], targets[j][0]), 2e-3);
}

TEST(ModelConstruct, ValidatesShapes) {
    Mlp net({Layer{DenseMatrix(2, 1), {0.0, 0.0}}}, 1.0, Activation::Sine);
    EXPECT_THROW(NeuMatCModel({OpKind::Inverse}, 3, 3, ParamDomain::unit(1), {Component{{3, 3}, Tensor3(3, 2, 2), net}}),
                 DimensionError);
    EXPECT_THROW(NeuMatCModel({OpKind::Inverse}, 3, 3, ParamDomain::unit(1), {Component{{3, 3}, Tensor3(3, 3, 3), net}}),
                 DimensionError);
    EXPECT_THROW(NeuMatCModel({OpKind::Svd}, 3, 3, ParamDomain::unit(1), {Component{{3, 3}, Tensor3(3, 3, 2), net}}),
                 DimensionError);
    EXPECT_THROW(NeuMatCModel({OpKind::Inverse}, 3, 3, ParamDomain{{0.0}, {0.0}},
                              {Component{{3, 3}, Tensor3(3, 3, 2), net}}),
                 DimensionError);
}

TEST(MultiDimensionalParameters, TwoAxisDomain) {
    auto cfg = small_config(14);
    cfg.net.input_dim = 2;
    const ParamDomain dom{{0.0, -1.0}, {1.0, 1.0}};
    const auto m = init_model({OpKind::Inverse}, 3, 3, dom, cfg);
    EXPECT_EQ(m.param_dim(), 2u);
    const std::vector<double> p{0.5, -0.5}, out{0.5, 1.5};
    EXPECT_FALSE(predict(m, p).out_of_domain);
    EXPECT_TRUE(predict(m, out).out_of_domain);
    EXPECT_THROW(init_model({OpKind::Inverse}, 3, 3, ParamDomain::unit(5), cfg), DimensionError);
}

TEST(Serialization, RoundTripBitExact) {
    for (const OperationKind kind : {OperationKind{OpKind::Inverse}, OperationKind{OpKind::Svd, 2},
                                     OperationKind{OpKind::Qr}, OperationKind{OpKind::Cholesky}}) {
        const auto m = random_model(kind, 4, 4, 15);
        EXPECT_EQ(deserialize_model(serialize_model(m)), m);
        const auto path = temp_file("model.nmc");
        save_model(m, path);
        EXPECT_EQ(load_model(path), m);
        std::filesystem::remove(path);
    }
}

TEST(Serialization, TruncatedFileRejected) {
    const auto bytes = serialize_model(random_model({OpKind::Inverse}, 3, 3, 16));
    for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(deserialize_model(part), FormatError) << "cut at " << cut;
    }
}

TEST(Serialization, BadMagicAndVersion) {
    auto bytes = serialize_model(random_model({OpKind::Inverse}, 3, 3, 17));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        deserialize_model(bad_magic);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
    auto bad_version = bytes;
    bad_version[4] = 99;
    EXPECT_THROW(deserialize_model(bad_version), UnsupportedVersionError);
    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(deserialize_model(trailing), FormatError);
}
