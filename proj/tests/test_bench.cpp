#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "neumatc/baselines.hpp"
#include "neumatc/bench.hpp"
#include "neumatc/datagen.hpp"
#include "neumatc/errors.hpp"

using namespace neumatc;

namespace {

DenseMatrix randm(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    DenseMatrix m(r, c);
    for (double& x : m.data()) x = nd(rng);
    return m;
}

}  // namespace

TEST(RelErr, HandExamples) {
    const DenseMatrix a{{2.0, 0.0}, {0.0, 4.0}};
    // Exact inverse -> 0; zero guess -> ||I||^2 / ||I||^2 = 1.
    EXPECT_EQ(relerr({OpKind::Inverse}, a, std::vector<DenseMatrix>{DenseMatrix{{0.5, 0.0}, {0.0, 0.25}}}), 0.0);
    EXPECT_EQ(relerr({OpKind::Inverse}, a, std::vector<DenseMatrix>{DenseMatrix(2, 2)}), 1.0);
    // G = I: A G - I = diag(1, 3), squared norm 10 over 2.
    EXPECT_DOUBLE_EQ(relerr({OpKind::Inverse}, a, std::vector<DenseMatrix>{DenseMatrix::identity(2)}), 5.0);
    // LinSolve is the unsquared ratio: x = 0 gives exactly 1.
    const std::vector<double> b{1.0, 1.0};
    EXPECT_EQ(relerr({OpKind::LinSolve}, a, std::vector<DenseMatrix>{DenseMatrix(2, 1)}, b), 1.0);
    EXPECT_THROW(relerr({OpKind::Svd}, DenseMatrix(2, 2),
                        std::vector<DenseMatrix>{DenseMatrix(2, 2), DenseMatrix(2, 1), DenseMatrix(2, 2)}),
                 DomainError);
}

TEST(RelErr, MatchesElementwiseOracle) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const DenseMatrix a = randm(5, 5, rng), g = randm(5, 5, rng);
        double num = 0.0;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < 5; ++k) s += a(i, k) * g(k, j);
                s -= i == j ? 1.0 : 0.0;
                num += s * s;
            }
        EXPECT_NEAR(relerr({OpKind::Inverse}, a, std::vector<DenseMatrix>{g}), num / 5.0, 1e-13 * num);

        const auto s = dense_svd(a);
        DenseMatrix u1(5, 2), v1(5, 2);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t k = 0; k < 2; ++k) {
                u1(i, k) = s.u(i, k);
                v1(i, k) = s.v(i, k);
            }
        const double tail = s.s[2] * s.s[2] + s.s[3] * s.s[3] + s.s[4] * s.s[4];
        const double rel = relerr({OpKind::Svd, 2}, a,
                                  std::vector<DenseMatrix>{u1, DenseMatrix::column(std::vector<double>{s.s[0], s.s[1]}), v1});
        EXPECT_NEAR(rel, tail / fro_norm_sq(a), 1e-12);
    }
}

TEST(RelErr, ExpmAgainstReference) {
    std::mt19937_64 rng(2);
    const DenseMatrix a = 0.3 * randm(4, 4, rng);
    const DenseMatrix e = expm(a);
    EXPECT_LT(relerr({OpKind::Expm}, a, std::vector<DenseMatrix>{e}), 1e-28);
    const DenseMatrix off = 1.01 * e;
    EXPECT_NEAR(relerr({OpKind::Expm}, a, std::vector<DenseMatrix>{off}, {}, &e), 1e-4, 1e-12);
}

TEST(StackedSingularValues, RankOfFamily) {
    std::mt19937_64 rng(3);
    const DenseMatrix c0 = randm(4, 3, rng), c1 = randm(4, 3, rng);
    std::vector<DenseMatrix> samples;
    for (int j = 0; j < 12; ++j) samples.push_back(std::cos(j * 0.3) * c0 + std::sin(j * 0.7) * c1);
    const auto sv = stacked_singular_values(samples);
    ASSERT_EQ(sv.size(), 12u);
    EXPECT_GT(sv[1] / sv[0], 1e-3);
    EXPECT_LT(sv[2] / sv[0], 1e-13);
    samples.push_back(DenseMatrix(3, 4));
    EXPECT_THROW(stacked_singular_values(samples), DimensionError);
}

TEST(FlopModel, HandCounts) {
    EXPECT_EQ(mlp_flops(1, 3, 100, 20), 2.0 * (100 + 100 * 100 + 100 * 20));
    EXPECT_EQ(mlp_flops(2, 0, 100, 20), 0.0);
    FlopScenario s;
    s.kind = {OpKind::Inverse};
    s.rows = s.cols = 64;
    s.d = {20};
    s.depth = 0;
    auto fc = flop_model(s);
    EXPECT_EQ(fc.neumatc, 2.0 * 64 * 64 * 20);
    s.d = {40};
    EXPECT_EQ(flop_model(s).neumatc_product, 2.0 * fc.neumatc_product);
    EXPECT_DOUBLE_EQ(fc.baseline("lu_inverse"), 2.0 * 64 * 64 * 64);
    EXPECT_DOUBLE_EQ(fc.baseline("lu_factor"), 2.0 * 64 * 64 * 64 / 3.0);
    EXPECT_THROW(fc.baseline("magic"), ArgumentError);

    FlopScenario svd;
    svd.kind = {OpKind::Svd, 10};
    svd.rows = 50;
    svd.cols = 40;
    svd.depth = 3;
    const auto fs = flop_model(svd);
    // Three components of sizes 50x10, 10x1 and 40x10, three MLPs.
    EXPECT_DOUBLE_EQ(fs.neumatc, 3 * mlp_flops(1, 3, 100, 20) + 2.0 * 20 * (500 + 10 + 400));
    const double m = 50, n = 40;
    EXPECT_DOUBLE_EQ(fs.baseline("svd"), 4 * m * m * n + 8 * m * n * n + 9 * n * n * n);
}

TEST(FlopModel, InversionRatioAtScale) {
    FlopScenario s;
    s.kind = {OpKind::Inverse};
    s.rows = s.cols = 1024;
    const auto fc = flop_model(s);
    const double ratio = fc.baseline("lu_inverse") / fc.neumatc;
    // Reported order of magnitude is 46x; the analytic model must land within a factor of 3.
    EXPECT_GT(ratio, 46.0 / 3.0);
    EXPECT_LT(ratio, 46.0 * 3.0);
}

TEST(FlopModel, ConcreteModelMatchesAnalytic) {
    ModelInitConfig mc;
    mc.d = {7};
    mc.net.depth = 3;
    mc.net.width = 9;
    const auto m = init_model({OpKind::Qr}, 6, 4, ParamDomain::unit(1), mc);
    FlopScenario s;
    s.kind = {OpKind::Qr};
    s.rows = 6;
    s.cols = 4;
    s.d = {7};
    s.width = 9;
    EXPECT_DOUBLE_EQ(model_flops(m), flop_model(s).neumatc);
}

TEST(BaselineNames, RoundTrip) {
    for (auto b : {Baseline::LuFactor, Baseline::LuInverse, Baseline::LuSolve, Baseline::Svd, Baseline::Rsvd,
                   Baseline::Crsvd, Baseline::HouseholderQr, Baseline::Cholesky, Baseline::ExpmPade13,
                   Baseline::BiCgStab})
        EXPECT_EQ(parse_baseline(baseline_name(b)), b);
    EXPECT_THROW(parse_baseline("gauss"), ArgumentError);
}

TEST(BenchCsv, RoundTripAndErrors) {
    const std::vector<BenchRow> rows{{"s-inverse-n8", "lu_inverse", 8, 0, 1e-30, 0.01, 1024.0},
                                     {"s-inverse-n8", "neumatc:run", 8, 20, 3.5e-7, 0.002, 5000.0}};
    std::stringstream ss;
    write_bench_csv(rows, ss);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), kBenchCsvHeader);
    EXPECT_EQ(parse_bench_csv(ss), rows);

    std::istringstream bad_header("scenario,method\n");
    EXPECT_THROW(parse_bench_csv(bad_header), FormatError);
    std::istringstream bad_row(std::string(kBenchCsvHeader) + "\na,b,notanumber,0,1,1,1\n");
    try {
        parse_bench_csv(bad_row);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 2u);
    }
}

TEST(RunBenchmark, BaselinesAndModelRows) {
    SinusoidalGenConfig g;
    g.n = 8;
    g.r = 2;
    g.n_train = 6;
    g.n_test = 5;
    auto gd = gen_sinusoidal(g);
    compute_targets(gd.train);
    ModelInitConfig mc;
    mc.d = {4};
    mc.net.width = 8;
    mc.latent = LatentInit::WarmStart;
    const auto model = init_model(gd.train.kind, 8, 8, gd.train.domain, mc, gd.train.params, gd.train.targets);

    BenchScenario sc;
    sc.id = "sinusoidal-inverse-n8";
    sc.kind = gd.test.kind;
    sc.params = gd.test.params;
    sc.inputs = gd.test.inputs;
    sc.repeats = 3;
    sc.warmups = 1;
    const std::vector<NamedModel> models{{"neumatc:toy", &model, 0.5}};
    const std::vector<Baseline> bl{Baseline::LuInverse};
    const auto rep = run_benchmark(sc, models, bl);
    ASSERT_EQ(rep.methods.size(), 2u);
    const auto& lu = rep.methods[1].method == "lu_inverse" ? rep.methods[1] : rep.methods[0];
    const auto& nm = rep.methods[1].method == "lu_inverse" ? rep.methods[0] : rep.methods[1];
    EXPECT_LT(lu.mean_relerr, 1e-20);
    EXPECT_EQ(lu.d, 0u);
    EXPECT_EQ(nm.d, 4u);
    EXPECT_EQ(nm.relerr.size(), 5u);
    EXPECT_DOUBLE_EQ(nm.flops, model_flops(model));
    EXPECT_GT(nm.p50_time_with_train_ms, nm.p50_time_ms);
    // Per-point RelErr is deterministic across runs; timings are not compared.
    const auto again = run_benchmark(sc, models, bl);
    for (std::size_t i = 0; i < rep.methods.size(); ++i) EXPECT_EQ(again.methods[i].relerr, rep.methods[i].relerr);

    const auto rows = bench_rows(std::vector<MetricReport>{rep});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].scenario_id, sc.id);
    EXPECT_EQ(rows[0].n, 8u);

    const auto only = run_benchmark(sc, {}, bl);
    EXPECT_EQ(only.methods.size(), 1u);
}
