#include <gtest/gtest.h>

#include <cmath>

#include "metarep/selection_model.hpp"

using namespace metarep;

TEST(StepPolicy, BandsAndBoundaries) {
    const StepPolicy p{{1.64, 1.96}, {0.1, 0.5, 1.0}};
    EXPECT_EQ(p.band_index(0.0), 0u);
    EXPECT_EQ(p.band_index(-1.63), 0u);
    EXPECT_EQ(p.band_index(1.64), 1u);
    EXPECT_EQ(p.band_index(-1.95), 1u);
    EXPECT_EQ(p.band_index(1.96), 2u);
    EXPECT_EQ(p.band_index(-30.0), 2u);
    EXPECT_DOUBLE_EQ(p.weight(1.7), 0.5);
    EXPECT_DOUBLE_EQ(policy_weight(p, -2.5), 1.0);
}

TEST(StepPolicy, Validation) {
    EXPECT_THROW(StepPolicy({1.64, 1.96}, {1.0, 1.0}), ConfigError);
    EXPECT_THROW(StepPolicy({1.96, 1.64}, {1.0, 1.0, 1.0}), ConfigError);
    EXPECT_THROW(StepPolicy({-1.0}, {1.0, 1.0}), ConfigError);
    EXPECT_THROW(StepPolicy({1.96}, {-0.1, 1.0}), ConfigError);
    EXPECT_THROW(StepPolicy({1.96}, {1.0, 0.0}), ConfigError);
}

TEST(StepPolicy, Normalization) {
    const StepPolicy p{{1.96}, {2.0, 4.0}};
    EXPECT_FALSE(p.is_normalized());
    EXPECT_EQ(p.normalized(), (StepPolicy{{1.96}, {0.5, 1.0}}));
    EXPECT_DOUBLE_EQ(p.max_weight(), 4.0);
    EXPECT_EQ(p.scaled(0.5), (StepPolicy{{1.96}, {1.0, 2.0}}));
}

TEST(Regimes, Policies) {
    EXPECT_DOUBLE_EQ(regime_policy(NoBias{}).weight(0.1), 1.0);
    EXPECT_DOUBLE_EQ(regime_policy(NoBias{}).weight(5.0), 1.0);
    const auto sig = regime_policy(SignificantOnly{});
    EXPECT_DOUBLE_EQ(sig.weight(1.9), 0.0);
    EXPECT_DOUBLE_EQ(sig.weight(1.96), 1.0);
    const auto fav = regime_policy(InsignificantFavored{});
    EXPECT_DOUBLE_EQ(fav.weight(0.0), 5.0);
    EXPECT_DOUBLE_EQ(fav.weight(2.0), 1.0);
    EXPECT_THROW(regime_policy(InsignificantFavored{-1.0}), ConfigError);
}

// Reference values computed with 40-digit arbitrary-precision arithmetic.
TEST(BandProbability, Reference) {
    EXPECT_NEAR(band_probability(0.0, 1.0, regime_policy(SignificantOnly{})), 0.04999579029644086827, 1e-15);
    EXPECT_NEAR(band_probability(0.3, 0.2, StepPolicy{{1.64, 1.96}, {0.0, 0.038, 1.0}}), 0.3276697663283943363,
                1e-14);
    EXPECT_NEAR(band_probability(0.1, 0.15, StepPolicy{{1.64, 1.96}, {0.012, 0.299, 1.0}}),
                0.1341183530591912888, 1e-14);
    EXPECT_DOUBLE_EQ(band_probability(0.7, 0.3, regime_policy(NoBias{})), 1.0);
    EXPECT_THROW(band_probability(0.1, 0.0, regime_policy(NoBias{})), DomainError);
}

TEST(BandProbability, MatchesMonteCarlo) {
    const StepPolicy p{{1.0, 1.64, 1.96, 3.0}, {0.3, 0.05, 0.6, 2.0, 1.0}};
    RandomStream s(2, 0);
    for (double mean_t : {-1.0, 0.0, 0.8, 2.5}) {
        const int n = 400000;
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += p.weight(mean_t + s.normal());
        const double mc = total / n;
        EXPECT_NEAR(band_probability(mean_t * 0.2, 0.2, p), mc, 4.0 * 1.0 / std::sqrt(n)) << mean_t;
    }
}

TEST(BandProbability, BoundedByMaxWeight) {
    const StepPolicy p{{1.64, 1.96, 3.0}, {0.2, 0.0, 3.0, 1.0}};
    for (double th = -2.0; th <= 2.0; th += 0.05) {
        const double v = band_probability(th, 0.3, p);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, p.max_weight() + 1e-15);
    }
}

TEST(StepPolicy, JsonRoundTrip) {
    const StepPolicy p{{1.64, 1.96}, {0.012, 0.299, 1.0}};
    const nlohmann::json j = p;
    EXPECT_EQ(j.get<StepPolicy>(), p);
    EXPECT_THROW(nlohmann::json::parse(R"({"cutoffs":[1.96]})").get<StepPolicy>(), ConfigError);
}
