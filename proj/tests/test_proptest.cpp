#include <gtest/gtest.h>

#include <sstream>

#include "neumatc/proptest.hpp"

using namespace neumatc;

TEST(Recovery, SingleBasisFunction) {
    const auto r = theorem1_recovery(1, 1, 4, 4, 3);
    EXPECT_LT(r.max_fit_error, 1e-12);
    EXPECT_LT(r.max_latent_error, 1e-12);
    EXPECT_LT(r.max_test_error, 1e-12);
    EXPECT_FALSE(r.underdetermined);
}

TEST(Recovery, ExactWithEnoughSamples) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = theorem1_recovery(3, 10, 6, 6, seed);
        EXPECT_LT(r.max_fit_error, 1e-8);
        EXPECT_LT(r.max_latent_error, 1e-8);
        EXPECT_LT(r.max_test_error, 1e-8);
    }
    EXPECT_TRUE(run_theorem1_oracle().passed);
}

TEST(Recovery, TooFewSamplesIsFlagged) {
    const auto r = theorem1_recovery(5, 3, 4, 4, 1);
    EXPECT_TRUE(r.underdetermined);
    // The fit still interpolates the samples, but off-sample values drift.
    EXPECT_LT(r.max_fit_error, 1e-8);
    EXPECT_GT(r.max_test_error, 1e-6);
}

TEST(Certificate, SmallSweepHasNoViolations) {
    const auto models = certificate_models(4, 0, 5);
    ASSERT_EQ(models.size(), 4u);
    const auto sweep = certificate_sweep(models, 200, 6);
    EXPECT_EQ(sweep.models, 4u);
    EXPECT_EQ(sweep.pairs, 800u);
    EXPECT_EQ(sweep.sound_violations, 0u);
    EXPECT_EQ(sweep.violations, 0u);
    EXPECT_LE(sweep.max_ratio, 1.0);
}

TEST(Properties, ModeThreeAlgebra) {
    const auto o = run_mode3_oracle(50, 4);
    EXPECT_TRUE(o.passed) << o.detail;
    EXPECT_LE(o.value, 1e-13);
}

TEST(Properties, GradientChecks) {
    const auto o = run_gradient_checks(2);
    EXPECT_TRUE(o.passed) << o.detail;
    EXPECT_LT(o.value, 1e-4);
}

TEST(Properties, BaselineGates) {
    const auto o = run_baseline_gates(3);
    EXPECT_TRUE(o.passed) << o.detail;
    EXPECT_LE(o.value, 1e-10);
}

TEST(PropertyOutput, CsvHeaderAndRow) {
    PropertyOutcome o;
    o.property.name = "demo";
    o.property.tolerance = 1e-3;
    o.passed = true;
    o.value = 2e-4;
    o.detail = "ok";
    std::ostringstream os;
    write_property_csv(std::vector<PropertyOutcome>{o}, os);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "name,passed,value,tolerance,seconds,detail");
    EXPECT_NE(s.find("demo,"), std::string::npos);
    std::ostringstream sum;
    write_property_summary(std::vector<PropertyOutcome>{o}, sum);
    EXPECT_NE(sum.str().find("PASS"), std::string::npos);
}

TEST(DeskSetups, ConfigurationsAreConsistent) {
    const auto inv = desk_inversion();
    EXPECT_EQ(inv.data.train.kind.op, OpKind::Inverse);
    EXPECT_EQ(operand_rows(inv.data.train.inputs[0]), 64u);
    EXPECT_NO_THROW(inv.train.validate());
    const auto adr = desk_adr();
    EXPECT_EQ(adr.data.train.size() + adr.data.test.size(), 200u);
    EXPECT_EQ(adr.data.train.kind.op, OpKind::LinSolve);
    EXPECT_NO_THROW(adr.train.validate());
}
