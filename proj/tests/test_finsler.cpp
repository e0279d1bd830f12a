#include "finsler_flow/finsler.hpp"

#include "catalog.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace finsler_flow;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return v;
}

// Static system whose first integral has gradient (1, 2, 3).
SystemSpec weighted3()
{
    return parse_system(R"js({"dim": 3, "field": ["0", "0", "0"], "integral": "x1 + 2*x2 + 3*x3"})js");
}

} // namespace

TEST(Finsler, GaugeDirection)
{
    const Vector g2 = gauge_direction(builtin("metzler_linear"), vec({0.3, 0.7}));
    EXPECT_NEAR(g2[0], 0.5, 1e-15);
    EXPECT_NEAR(g2[1], 0.5, 1e-15);
    const Vector g3 = gauge_direction(weighted3(), vec({1, 1, 1}));
    EXPECT_LT((g3 - vec({1, 2, 3}) / 14.0).norm(), 1e-12);
    const auto flat = parse_system(R"js({"dim": 2, "field": ["0", "0"], "integral": "x1*x1 + x2*x2"})js");
    EXPECT_THROW(gauge_direction(flat, vec({0, 0})), SpecError);
}

TEST(Finsler, NormExamples)
{
    const auto metz = builtin("metzler_linear");
    const auto v = make_tangent(metz, vec({0.2, 0.4}), vec({1, -1}));
    EXPECT_NEAR(finsler_norm(metz, v), 1.0, 1e-15);
    EXPECT_NEAR(finsler_norm_oracle(metz, v), 1.0, 1e-10);
    const auto zero = make_tangent(metz, vec({0.2, 0.4}), vec({0, 0}));
    EXPECT_EQ(finsler_norm(metz, zero), 0.0);
    EXPECT_NEAR(finsler_norm_oracle(metz, zero), 0.0, 1e-10);
    const auto w3 = weighted3();
    const auto u = make_tangent(w3, vec({0, 0, 0}), vec({2, -1, 0}));
    EXPECT_NEAR(finsler_norm(w3, u), 2.0, 1e-15);
    EXPECT_NEAR(finsler_norm_oracle(w3, u), 2.0, 1e-10);
}

TEST(Finsler, NonTangentVectorRejected)
{
    const auto metz = builtin("metzler_linear");
    const auto v = make_tangent(metz, vec({0.2, 0.4}), vec({1, 0}));
    EXPECT_THROW(finsler_norm(metz, v), SpecError);
    EXPECT_THROW(finsler_norm_oracle(metz, v), SpecError);
}

TEST(Finsler, OracleAgreementOnCatalog)
{
    std::mt19937_64 rng(23);
    int checked = 0;
    for (const auto& sys : testing_support::catalog()) {
        for (int k = 0; k < 250; ++k) {
            const Vector x = testing_support::random_point(sys, rng);
            const auto v = make_tangent(sys, x, testing_support::random_tangent(sys, x, rng));
            const double oracle = finsler_norm_oracle(sys, v);
            EXPECT_NEAR(finsler_norm(sys, v), oracle, 1e-10 * (1 + oracle));
            ++checked;
        }
    }
    EXPECT_EQ(checked, 1000);
}

TEST(Finsler, NormAxioms)
{
    std::mt19937_64 rng(29);
    for (const auto& sys : testing_support::catalog()) {
        const Vector x = testing_support::random_point(sys, rng);
        for (int k = 0; k < 100; ++k) {
            const Vector v = testing_support::random_tangent(sys, x, rng);
            const Vector w = testing_support::random_tangent(sys, x, rng);
            const double alpha = std::uniform_real_distribution<double>(-5, 5)(rng);
            const double nv = finsler_norm(sys, make_tangent(sys, x, v));
            const double nw = finsler_norm(sys, make_tangent(sys, x, w));
            EXPECT_GT(nv, 0.0);
            EXPECT_NEAR(finsler_norm(sys, make_tangent(sys, x, alpha * v)), std::abs(alpha) * nv,
                        1e-12 * std::abs(alpha) * nv);
            EXPECT_LE(finsler_norm(sys, make_tangent(sys, x, v + w)), nv + nw + 1e-12);
        }
    }
}

TEST(Finsler, ComparisonBoundIsTightForUniformGradient)
{
    const auto metz = builtin("metzler_linear");
    const double c = norm_comparison_bound(metz, vec({0.5, 0.5}));
    EXPECT_NEAR(c, std::sqrt(2.0), 1e-14);
    // The unit ball's tangent slice is the segment between ±(1, -1).
    const Vector v = vec({1, -1});
    EXPECT_NEAR(v.norm() / finsler_norm(metz, make_tangent(metz, vec({0.5, 0.5}), v)), c, 1e-14);
}

TEST(Finsler, ComparisonBoundHoldsOnSamples)
{
    const auto w3 = weighted3();
    const Vector x = vec({0, 0, 0});
    const Vector a = vec({1, 2, 3}) / 14.0;
    double oracle = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double cj = 1.0 / (14.0 * a[j]) - a[j];
        oracle += cj * cj;
    }
    const double c = norm_comparison_bound(w3, x);
    EXPECT_NEAR(c, 2.0 * std::sqrt(oracle), 1e-12);
    std::mt19937_64 rng(31);
    for (const auto& sys : testing_support::catalog()) {
        const Vector y = testing_support::random_point(sys, rng);
        const double cy = norm_comparison_bound(sys, y);
        for (int k = 0; k < 1000; ++k) {
            const Vector v = testing_support::random_tangent(sys, y, rng);
            EXPECT_LE(v.norm(), cy * finsler_norm(sys, make_tangent(sys, y, v)) * (1 + 1e-12));
        }
    }
    for (int k = 0; k < 1000; ++k) {
        Vector v = testing_support::random_tangent(w3, x, rng);
        v /= finsler_norm(w3, make_tangent(w3, x, v));
        EXPECT_LE(v.norm(), c * (1 + 1e-12));
    }
    const auto skewed = parse_system(R"js({"dim": 2, "field": ["0", "0"], "integral": "2*x1"})js");
    EXPECT_THROW(norm_comparison_bound(skewed, vec({1, 1})), SpecError);
}

TEST(Finsler, LyapunovProfileMetzler)
{
    const auto rep = lyapunov_profile(builtin("metzler_linear"), vec({1, 0}), 3.0, {}, 31);
    ASSERT_EQ(rep.times.size(), 31u);
    EXPECT_EQ(rep.kind, "lyapunov");
    EXPECT_EQ(rep.strict_decrease, Verdict::Holds);
    EXPECT_FALSE(rep.equilibrium);
    for (std::size_t k = 0; k < rep.times.size(); ++k)
        EXPECT_NEAR(rep.values[k], std::exp(-2 * rep.times[k]), 1e-8) << k;
    EXPECT_NEAR(rep.worst_adjacent_ratio, std::exp(-0.2), 1e-7);
    EXPECT_LT(rep.contraction_factor, 1.0);
}

TEST(Finsler, LyapunovProfileDriftless)
{
    const auto rep = lyapunov_profile(builtin("driftless_exchange"), vec({0, 0}), 50.0, {}, 26);
    EXPECT_EQ(rep.strict_decrease, Verdict::Holds);
    for (std::size_t k = 0; k < rep.times.size(); ++k)
        EXPECT_NEAR(rep.values[k], 1.0 / (1.0 + 2.0 * rep.times[k]), 1e-7 * rep.values[k]) << k;
}

TEST(Finsler, LyapunovProfileBackwardIncreases)
{
    const auto rep = lyapunov_profile(builtin("cyclic_compartment", {{"n", 3}}), vec({0.1, -0.04, 0.02}), -1.0, {}, 11);
    ASSERT_EQ(rep.times.front(), -1.0);
    ASSERT_EQ(rep.times.back(), 0.0);
    for (std::size_t k = 1; k < rep.values.size(); ++k)
        EXPECT_LT(rep.values[k], rep.values[k - 1]);
    EXPECT_EQ(rep.strict_decrease, Verdict::Holds);
}

TEST(Finsler, LyapunovProfileAtEquilibrium)
{
    const auto rep = lyapunov_profile(builtin("metzler_linear"), vec({0.7, 0.7}), 2.0, {}, 5);
    EXPECT_TRUE(rep.equilibrium);
    EXPECT_EQ(rep.strict_decrease, Verdict::Inconclusive);
    for (double v : rep.values)
        EXPECT_EQ(v, 0.0);
}

TEST(Finsler, ContractionEigenvector)
{
    const auto metz = builtin("metzler_linear");
    const auto v = make_tangent(metz, vec({0.9, -0.1}), vec({1, -1}));
    const auto rep = contraction_certificate(metz, vec({0.9, -0.1}), v, 4.0, {}, 41);
    EXPECT_EQ(rep.kind, "contraction");
    EXPECT_EQ(rep.strict_decrease, Verdict::Holds);
    EXPECT_EQ(rep.values.front(), finsler_norm(metz, v));
    for (std::size_t k = 0; k < rep.times.size(); ++k)
        EXPECT_NEAR(rep.values[k], std::exp(-2 * rep.times[k]), 1e-8) << k;
}

TEST(Finsler, ContractionOnRandomCyclicTangents)
{
    const auto sys = builtin("cyclic_compartment", {{"n", 3}});
    std::mt19937_64 rng(37);
    for (int k = 0; k < 10; ++k) {
        const Vector x = testing_support::random_point(sys, rng) * 0.2;
        const auto v = make_tangent(sys, x, testing_support::random_tangent(sys, x, rng));
        const auto rep = contraction_certificate(sys, x, v, 5.0, {}, 50);
        EXPECT_EQ(rep.strict_decrease, Verdict::Holds) << k;
        EXPECT_LT(rep.contraction_factor, 1.0);
        EXPECT_LE(rep.max_tangency_residual, kTangencyDriftTol);
    }
}

TEST(Finsler, ContractionPreconditions)
{
    const auto metz = builtin("metzler_linear");
    const auto v = make_tangent(metz, vec({0.9, -0.1}), vec({1, -1}));
    EXPECT_THROW(contraction_certificate(metz, vec({0.9, -0.1}), v, 0.0), FlowError);
    EXPECT_THROW(contraction_certificate(metz, vec({0.5, 0.5}), v, 1.0), SpecError);
    const auto z = make_tangent(metz, vec({0.9, -0.1}), vec({0, 0}));
    EXPECT_THROW(contraction_certificate(metz, vec({0.9, -0.1}), z, 1.0), SpecError);
}

TEST(Finsler, SummaryAndCsv)
{
    FinslerReport rep;
    rep.times = {0, 1, 2};
    rep.values = {1, 0.5, 0.5};
    rep.log_values = {0, std::log(0.5), std::log(0.5)};
    summarize_decrease(rep);
    EXPECT_EQ(rep.strict_decrease, Verdict::Fails);
    EXPECT_NEAR(rep.worst_adjacent_ratio, 1.0, 1e-15);
    EXPECT_NEAR(rep.contraction_factor, 1.0, 1e-15);
    EXPECT_EQ(finsler_csv(rep), "t,value\n0,1\n1,0.5\n2,0.5\n");
}
