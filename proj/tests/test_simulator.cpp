#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "metarep/simulator.hpp"
#include "metarep/verify.hpp"

using namespace metarep;

namespace {

ReplicationRecord make_record(double x, double sigma, double x_r, double sigma_r, double theta = 0.3) {
    ReplicationRecord r;
    r.origin = {theta, sigma, x, true, true};
    r.x_r = x_r;
    r.sigma_r = sigma_r;
    return r;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(RecordMetrics, TrivialCases) {
    std::vector<ReplicationRecord> recs{make_record(0.5, 0.2, 0.5, 1e-6), make_record(-0.9, 0.3, -0.9, 1e-6),
                                        make_record(0.1, 0.2, 0.1, 1e-6)};
    EXPECT_DOUBLE_EQ(simulated_replication_rate(recs), 1.0);
    EXPECT_DOUBLE_EQ(regression_to_mean_ratio(recs), 1.0);
    for (auto& r : recs) r.x_r = 0.0;
    EXPECT_DOUBLE_EQ(simulated_replication_rate(recs), 0.0);
    // The insignificant original counts as replicated when the replication is insignificant too.
    EXPECT_DOUBLE_EQ(generalized_replication_rate(recs), 1.0 / 3.0);
}

TEST(RecordMetrics, OppositeSignIsFailure) {
    std::vector<ReplicationRecord> recs{make_record(0.5, 0.2, -0.5, 0.01)};
    EXPECT_DOUBLE_EQ(simulated_replication_rate(recs), 0.0);
}

TEST(RecordMetrics, EmptyInputsThrow) {
    std::vector<ReplicationRecord> none;
    EXPECT_THROW(simulated_replication_rate(none), EmptySetError);
    EXPECT_THROW(regression_to_mean_ratio(none), EmptySetError);
    EXPECT_THROW(generalized_replication_rate(none), EmptySetError);
    std::vector<StudyRecord> studies{{0.1, 0.2, 0.3, false, false}};
    EXPECT_THROW(mean_bias(studies), EmptySetError);
    EXPECT_THROW(coverage(studies), EmptySetError);
    std::vector<ReplicationRecord> insignificant_only{make_record(0.1, 0.2, 0.1, 1.0)};
    EXPECT_THROW(simulated_replication_rate(insignificant_only), EmptySetError);
    EXPECT_THROW(MetricsAccumulator{}.finish(), EmptySetError);
}

TEST(RecordMetrics, ZeroDenominatorRmr) {
    std::vector<ReplicationRecord> recs{make_record(0.5, 0.2, 0.1, 1.0), make_record(-0.5, 0.2, 0.1, 1.0)};
    EXPECT_THROW(regression_to_mean_ratio(recs), NumericalError);
}

TEST(RecordMetrics, BiasAndCoverage) {
    std::vector<StudyRecord> s{{0.2, 0.1, 0.3, true, true}, {0.2, 0.1, 0.5, true, true}, {0.2, 0.1, 9.0, false, false}};
    EXPECT_NEAR(mean_bias(s), 0.2, 1e-15);
    EXPECT_DOUBLE_EQ(coverage(s), 0.5);
}

TEST(Simulate, ConfigValidation) {
    SimulationConfig c{econ_table1().latent, econ_table1().policy};
    c.n_draws = 9999;
    EXPECT_THROW(simulate(c), ConfigError);
    c.n_draws = 100000;
    c.power_rule = CommonMean{1.2};
    EXPECT_THROW(simulate(c), ConfigError);
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
    SimulationConfig c{psych_table1().latent, psych_table1().policy};
    c.n_draws = 700'001;
    c.seed = 17;
    c.threads = 1;
    const auto a = simulate(c);
    c.threads = 4;
    const auto b = simulate(c);
    EXPECT_TRUE(same_bits(a.replication_rate, b.replication_rate));
    EXPECT_TRUE(same_bits(a.rmr, b.rmr));
    EXPECT_TRUE(same_bits(a.mean_bias, b.mean_bias));
    EXPECT_TRUE(same_bits(a.coverage, b.coverage));
    EXPECT_TRUE(same_bits(a.generalized_rr, b.generalized_rr));
    EXPECT_EQ(a.n_included, b.n_included);
    EXPECT_EQ(a.n_draws, 700'001u);
    c.seed = 18;
    EXPECT_NE(simulate(c).n_included, a.n_included);
}

TEST(Simulate, RecordsAgreeWithStreamingMetrics) {
    SimulationConfig c{econ_table1().latent, econ_table1().policy};
    c.n_draws = 200'000;
    c.seed = 4;
    const auto m = simulate(c);
    const auto recs = simulate_records(c);
    ASSERT_EQ(recs.size(), 200'000u);
    EXPECT_DOUBLE_EQ(simulated_replication_rate(recs), m.replication_rate);
    EXPECT_NEAR(regression_to_mean_ratio(recs), m.rmr, 1e-12);
    EXPECT_DOUBLE_EQ(generalized_replication_rate(recs), m.generalized_rr);
    std::vector<StudyRecord> studies;
    for (const auto& r : recs) {
        studies.push_back(r.origin);
        ASSERT_GT(r.origin.theta, 0.0);
        ASSERT_TRUE(!r.origin.selected || r.origin.published);
        // Economics policy never publishes |t| < 1.64.
        if (r.origin.published) {
            ASSERT_GE(std::abs(r.origin.x / r.origin.sigma), 1.64);
        }
    }
    EXPECT_NEAR(mean_bias(studies), m.mean_bias, 1e-12);
    EXPECT_DOUBLE_EQ(coverage(studies), m.coverage);
}

TEST(Simulate, McSeMatchesRepeatDispersion) {
    SimulationConfig c{psych_table1().latent, psych_table1().policy};
    c.n_draws = 100'000;
    std::vector<double> rates;
    double se = 0.0;
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        c.seed = seed;
        const auto m = simulate(c);
        EXPECT_NEAR(m.mc_se, std::sqrt(m.replication_rate * (1 - m.replication_rate) / m.n_included), 1e-15);
        rates.push_back(m.replication_rate);
        se += m.mc_se / 30.0;
    }
    double mean = 0.0, var = 0.0;
    for (double r : rates) mean += r / rates.size();
    for (double r : rates) var += (r - mean) * (r - mean) / (rates.size() - 1);
    EXPECT_GT(std::sqrt(var) / se, 0.6);
    EXPECT_LT(std::sqrt(var) / se, 1.5);
}

TEST(Simulate, ProbabilitiesInRange) {
    for (const auto& m : random_latent_models(5, 3)) {
        SimulationConfig c{m, psych_table1().policy};
        c.n_draws = 100'000;
        const auto r = simulate(c);
        for (double p : {r.replication_rate, r.generalized_rr, r.coverage, r.share_significant}) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
        }
        EXPECT_LE(r.n_included, r.n_draws);
    }
}

TEST(Simulate, NoBiasCoverageIsNominal) {
    for (const auto& m : random_latent_models(3, 8)) {
        SimulationConfig c{m, regime_policy(NoBias{})};
        c.n_draws = 2'000'000;
        const auto r = simulate(c);
        EXPECT_NEAR(r.coverage, 0.95, 0.005);
        const double sd = std::sqrt(m.sigma.shape * (m.sigma.shape + 1.0)) * m.sigma.scale;
        EXPECT_NEAR(r.mean_bias, 0.0, 4.0 * sd / std::sqrt(2e6));
    }
}

TEST(Simulate, SignificantOnlyUndercovers) {
    SimulationConfig c{LatentModel{{1.0, 0.05}, {3.0, 0.1}}, regime_policy(SignificantOnly{})};
    c.n_draws = 500'000;
    EXPECT_LT(simulate(c).coverage, 0.9);
}

TEST(Simulate, RmrBelowOneWhenSelectionBinds) {
    for (const auto& m : random_latent_models(5, 21)) {
        SimulationConfig c{m, regime_policy(NoBias{})};
        c.n_draws = 500'000;
        const auto r = simulate(c);
        ASSERT_LT(r.share_significant, 1.0);
        EXPECT_LT(r.rmr, 1.0);
    }
}

// Replication rate is unaffected by how often insignificant results get published.
TEST(Properties, PublicationInvariance) {
    std::vector<StepPolicy> policies;
    for (double w : {0.0, 0.2, 1.0, 5.0}) policies.emplace_back(std::vector<double>{1.64, 1.96}, std::vector<double>{w, w, 1.0});
    for (const auto& m : random_latent_models(10, 1)) {
        const auto res = simulate_policies(GammaLatentSampler{m}, policies, CommonMean{0.92}, 4'000'000, 0);
        for (const auto& r : res) EXPECT_NEAR(r.replication_rate, res[2].replication_rate, 0.005);
    }
}

// Significant originals overstate the truth; replications do not.
TEST(Properties, RegressionToMean) {
    const StepPolicy policies[] = {regime_policy(SignificantOnly{})};
    for (double theta : {0.2, 0.5, 1.0, 2.0, 3.0}) {
        for (double sigma : {0.25, 0.5, 1.0}) {
            const auto m = simulate_policies(PointLatentSampler{theta, sigma}, policies, CommonMean{0.9}, 400'000, 5)
                               .front();
            EXPECT_GT(m.mean_x_significant, theta);
            EXPECT_NEAR(m.mean_xr_significant, theta, 3.0 * m.mean_xr_significant_se);
        }
    }
}

TEST(Sweeps, PolicySweepColumns) {
    const double grid[] = {0.0, 0.25, 0.5, 1.0};
    const auto rows = policy_sweep(econ_table1().latent, grid, CommonMean{0.92}, 2'000'000, 0);
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].metrics.mean_bias, rows[i - 1].metrics.mean_bias);
        EXPECT_GE(rows[i].metrics.coverage, rows[i - 1].metrics.coverage);
    }
    EXPECT_NEAR(rows.back().metrics.coverage, 0.95, 0.005);
    const double bad[] = {1.2};
    EXPECT_THROW(policy_sweep(econ_table1().latent, bad, CommonMean{0.92}, 100'000, 0), DomainError);
}

TEST(Sweeps, TierSweepShape) {
    const double grid[] = {0.0, 0.5, 1.0};
    const auto rows = moderate_significance_sweep(econ_table1().latent, 3.0, grid, 0.92, econ_table1().policy,
                                                  2'000'000, 0);
    EXPECT_GT(rows[0].replication_rate, rows[1].replication_rate);
    EXPECT_GT(rows[1].replication_rate, rows[2].replication_rate);
    EXPECT_GT(rows[0].mean_true_effect, rows[1].mean_true_effect);
    EXPECT_GT(rows[1].mean_true_effect, rows[2].mean_true_effect);
    EXPECT_THROW(moderate_significance_sweep(econ_table1().latent, 1.96, grid, 0.92, econ_table1().policy), DomainError);
}

TEST(WorkedExample, Regimes) {
    const auto r1 = simple_example(NoBias{});
    const auto r2 = simple_example(SignificantOnly{});
    const auto r3 = simple_example(InsignificantFavored{5.0});
    EXPECT_NEAR(r1.bias, 0.00, 0.005);
    EXPECT_NEAR(r2.bias, 0.49, 0.005);
    EXPECT_NEAR(r3.bias, -0.63, 0.005);
    EXPECT_NEAR(r2.mean_x, 2.99, 0.01);
    EXPECT_NEAR(r3.mean_x, 1.87, 0.01);
    for (const auto& r : {r1, r2, r3}) {
        EXPECT_NEAR(r.mean_x_significant, 2.99, 0.01);
        EXPECT_NEAR(r.mean_xr_significant, 2.50, 0.01);
        EXPECT_NEAR(r.replication_rate, 0.77, 0.01);
    }
}

TEST(Presets, Lookup) {
    EXPECT_EQ(find_preset("econ-table1").latent, econ_table1().latent);
    EXPECT_EQ(find_preset("psych-table1").policy, psych_table1().policy);
    EXPECT_THROW(find_preset("biology"), ConfigError);
    EXPECT_DOUBLE_EQ(econ_table1().latent.theta.shape, 1.426);
    EXPECT_DOUBLE_EQ(econ_table1().latent.theta.scale, 0.148);
    EXPECT_DOUBLE_EQ(econ_table1().latent.sigma.shape, 2.735);
    EXPECT_DOUBLE_EQ(econ_table1().latent.sigma.scale, 0.103);
    EXPECT_EQ(econ_table1().policy.weights(), (std::vector<double>{0.0, 0.038, 1.0}));
    EXPECT_DOUBLE_EQ(psych_table1().latent.theta.shape, 0.906);
    EXPECT_DOUBLE_EQ(psych_table1().latent.theta.scale, 0.156);
    EXPECT_DOUBLE_EQ(psych_table1().latent.sigma.shape, 4.762);
    EXPECT_DOUBLE_EQ(psych_table1().latent.sigma.scale, 0.044);
    EXPECT_EQ(psych_table1().policy.weights(), (std::vector<double>{0.012, 0.299, 1.0}));
}
