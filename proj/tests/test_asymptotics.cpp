#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "hermvas/asymptotics.hpp"
#include "oracles.hpp"

using namespace hermvas;

TEST(SigmaInner, MatchesOneDimensionalOracle)
{
    for (double H : {0.55, 0.6, 0.7, 0.74}) {
        for (double x : {0.0, 1e-6, 0.01, 0.3, 1.0, 2.0, 7.5, 40.0, 150.0}) {
            const double want = oracle::sigma_inner_1d(x, H);
            EXPECT_NEAR(sigma_inner(x, H), want, 1e-8 * want) << "H=" << H << " x=" << x;
        }
    }
}

TEST(SigmaInner, MatchesTwoDimensionalBruteForce)
{
    for (double x : {0.0, 0.5, 3.0, 20.0}) {
        const double want = oracle::sigma_inner_2d(x, 0.6);
        EXPECT_NEAR(sigma_inner(x, 0.6), want, 1e-8 * want) << x;
    }
}

TEST(SigmaInner, EvenAndDecreasing)
{
    EXPECT_EQ(sigma_inner(-2.5, 0.65), sigma_inner(2.5, 0.65));
    double prev = sigma_inner(0.0, 0.65);
    for (double x = 0.1; x < 100.0; x *= 1.5) {
        const double f = sigma_inner(x, 0.65);
        EXPECT_LT(f, prev);
        prev = f;
    }
    // large-x behaviour x^{2H-2}
    EXPECT_NEAR(sigma_inner(400.0, 0.65) / std::pow(400.0, -0.7), 1.0, 1e-4);
}

TEST(SigmaH, MatchesNestedBruteForce)
{
    const double want = oracle::sigma_h_3d(0.6);
    EXPECT_NEAR(sigma_h(0.6), want, 1e-3);
    EXPECT_NEAR(sigma_h(0.6), want, 1e-8 * want);
}

TEST(SigmaH, StableUnderRefinement)
{
    for (double H : {0.55, 0.6, 0.7}) {
        const double v1 = sigma_h(H, {1});
        const double v2 = sigma_h(H, {2});
        EXPECT_GT(v1, 0.0);
        EXPECT_LT(std::abs(v2 - v1), 1e-4) << H;
        // moving the tail cutoff exercises the asymptotic tail
        EXPECT_NEAR(sigma_h(H, {1, 80.0}), v1, 1e-7 * v1) << H;
    }
}

TEST(SigmaH, Domain)
{
    EXPECT_THROW(sigma_h(0.75), ParameterError);
    EXPECT_THROW(sigma_h(0.5), ParameterError);
}

TEST(SigmaH, ConcurrentCallsAgree)
{
    std::vector<double> out(4);
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < out.size(); ++i) pool.emplace_back([&out, i] { out[i] = sigma_h(0.58 + 0.01 * (i % 2)); });
    pool.clear();
    EXPECT_EQ(out[0], out[2]);
    EXPECT_EQ(out[1], out[3]);
    EXPECT_EQ(out[0], sigma_h(0.58));
}

TEST(BConstant, GoldenValues)
{
    // q = 2 simplifies to sqrt(2(2H-1)/H) Gamma(1+H)
    const double H = 0.7;
    EXPECT_NEAR(b_constant(HermiteSpec(2, H)), std::sqrt(2 * (2 * H - 1) / H) * std::tgamma(1 + H), 1e-14);
    EXPECT_NEAR(b_constant(HermiteSpec(2, H)), 0.9713757, 5e-8);
    // q = 1, H = 0.8: 0.48 / sqrt(0.3 * 0.2), Gamma(2) / 1 = 1
    EXPECT_NEAR(b_constant(HermiteSpec(1, 0.8)), 0.48 / std::sqrt(0.06), 1e-14);
    EXPECT_THROW(b_constant(HermiteSpec(1, 0.75)), ParameterError);
    EXPECT_THROW(b_constant(HermiteSpec(1, 0.6)), ParameterError);
}

TEST(FluctuationLaw, Classification)
{
    EXPECT_EQ(classify(HermiteSpec(1, 0.6)), FluctuationCase::GaussianSubcritical);
    EXPECT_EQ(classify(HermiteSpec(1, 0.75)), FluctuationCase::GaussianCritical);
    EXPECT_EQ(classify(HermiteSpec(1, 0.8)), FluctuationCase::GaussianSupercritical);
    EXPECT_EQ(classify(HermiteSpec(2, 0.6)), FluctuationCase::HermiteDriven);
    EXPECT_EQ(classify(HermiteSpec(3, 0.9)), FluctuationCase::HermiteDriven);
    EXPECT_EQ(to_string(FluctuationCase::GaussianCritical), "GaussianCritical");
}

TEST(FluctuationLaw, Subcritical)
{
    const auto law = fluctuation_law(HermiteSpec(1, 0.6), 1.0);
    EXPECT_EQ(law.a_rate_exponent, 0.5);
    EXPECT_FALSE(law.a_rate_log);
    EXPECT_NEAR(law.b_rate_exponent, 0.4, 1e-15);
    EXPECT_EQ(law.a_limit.kind, LimitKind::Gaussian);
    EXPECT_NEAR(law.a_limit.scale, sigma_h(0.6) / (2 * 0.36 * std::tgamma(1.2)), 1e-12);
    EXPECT_EQ(law.a_limit.sign, -1.0);
    EXPECT_EQ(law.b_limit.kind, LimitKind::Gaussian);
    EXPECT_EQ(law.b_limit.scale, 1.0);
    EXPECT_TRUE(law.components_independent);
    // a-dependence a^{1+4H} and 1/a
    const auto law2 = fluctuation_law(HermiteSpec(1, 0.6), 2.0);
    EXPECT_NEAR(law2.a_limit.scale / law.a_limit.scale, std::pow(2.0, 3.4), 1e-12);
    EXPECT_EQ(law2.b_limit.scale, 0.5);
    EXPECT_NEAR(law.a_normalizer(1600.0), 40.0, 1e-12);
}

TEST(FluctuationLaw, Critical)
{
    const auto law = fluctuation_law(HermiteSpec(1, 0.75), 1.0);
    EXPECT_TRUE(law.a_rate_log);
    EXPECT_NEAR(law.a_limit.scale, 0.423142, 5e-7);
    EXPECT_NEAR(law.a_limit.scale, 0.75 / std::sqrt(std::numbers::pi), 1e-15);
    EXPECT_NEAR(law.a_normalizer(1600.0), std::sqrt(1600.0 / std::log(1600.0)), 1e-12);
    EXPECT_NEAR(law.b_rate_exponent, 0.25, 1e-15);
    EXPECT_TRUE(law.components_independent);
}

TEST(FluctuationLaw, Supercritical)
{
    const auto law = fluctuation_law(HermiteSpec(1, 0.8), 1.0);
    EXPECT_NEAR(law.a_rate_exponent, 0.4, 1e-15);
    EXPECT_EQ(law.a_limit.kind, LimitKind::Rosenblatt);
    EXPECT_NEAR(law.a_limit.index, 0.6, 1e-15);
    EXPECT_TRUE(law.a_limit.fbm_square_correction);
    EXPECT_NEAR(law.a_limit.rosenblatt_scale, b_constant(HermiteSpec(1, 0.8)), 1e-15);
    EXPECT_FALSE(law.components_independent);
    EXPECT_EQ(law.b_limit.kind, LimitKind::Gaussian);
}

TEST(FluctuationLaw, HermiteDriven)
{
    const auto law = fluctuation_law(HermiteSpec(2, 0.7), 1.0);
    EXPECT_NEAR(law.a_rate_exponent, 0.3, 1e-15);
    EXPECT_NEAR(law.b_rate_exponent, 0.3, 1e-15);
    EXPECT_EQ(law.a_limit.kind, LimitKind::Rosenblatt);
    EXPECT_NEAR(law.a_limit.index, rosenblatt_index(HermiteSpec(2, 0.7)), 1e-15);
    EXPECT_NEAR(law.a_limit.index, 0.7, 1e-15);
    EXPECT_NEAR(law.a_limit.scale, b_constant(HermiteSpec(2, 0.7)) / (2 * 0.49 * std::tgamma(1.4)), 1e-12);
    EXPECT_EQ(law.b_limit.kind, LimitKind::Hermite);
    EXPECT_EQ(law.b_limit.order, 2);
    EXPECT_FALSE(law.components_independent);
    EXPECT_NEAR(rosenblatt_index(HermiteSpec(3, 0.9)), 1.0 - 2.0 / 3.0 * 0.1, 1e-15);
    EXPECT_THROW(fluctuation_law(HermiteSpec(2, 0.7), 0.0), ParameterError);
}
