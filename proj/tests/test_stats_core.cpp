#include <gtest/gtest.h>

#include <cmath>

#include "metarep/stats_core.hpp"

using namespace metarep;

// Reference values computed with 40-digit arbitrary-precision arithmetic.

TEST(Normal, CdfReference) {
    EXPECT_NEAR(norm_cdf(1.96), 0.9750021048517795659, 1e-15);
    EXPECT_NEAR(norm_cdf(-3.5), 0.0002326290790355250363, 1e-18);
    EXPECT_NEAR(norm_cdf(0.3), 0.6179114221889526373, 1e-15);
    EXPECT_NEAR(norm_cdf(0.0), 0.5, 1e-16);
}

TEST(Normal, QuantileReference) {
    EXPECT_NEAR(norm_quantile(0.975), 1.959963984540054236, 1e-13);
    EXPECT_NEAR(norm_quantile(0.08), -1.405071560309632556, 1e-13);
    EXPECT_NEAR(norm_quantile(1e-10), -6.361340902404056205, 1e-11);
}

TEST(Normal, QuantileInvertsCdf) {
    for (double p = 0.001; p < 1.0; p += 0.0173) EXPECT_NEAR(norm_cdf(norm_quantile(p)), p, 1e-14);
}

TEST(Normal, DomainErrors) {
    EXPECT_THROW(norm_quantile(0.0), DomainError);
    EXPECT_THROW(norm_quantile(1.0), DomainError);
    EXPECT_THROW(norm_quantile(-0.1), DomainError);
    EXPECT_THROW(norm_cdf(NAN), DomainError);
    EXPECT_THROW(norm_cdf(INFINITY), DomainError);
}

TEST(Gamma, Reference) {
    EXPECT_NEAR(gamma_cdf({1.426, 0.148}, 0.3), 0.7643387814578853047, 1e-13);
    EXPECT_NEAR(gamma_cdf({0.906, 0.156}, 0.05), 0.3191792197737936861, 1e-13);
    EXPECT_NEAR(gamma_log_pdf({2.735, 0.103}, 0.25), 0.9213412378468042864, 1e-12);
    EXPECT_NEAR(gamma_quantile({4.762, 0.044}, 0.99), 0.4945240936556377772, 1e-12);
}

TEST(Gamma, ScaleParameterization) {
    const GammaParams g{1.426, 0.148};
    EXPECT_DOUBLE_EQ(g.mean(), 1.426 * 0.148);
    EXPECT_DOUBLE_EQ(g.variance(), 1.426 * 0.148 * 0.148);
}

TEST(Gamma, InvalidParams) {
    EXPECT_THROW(GammaParams(0.0, 1.0), DomainError);
    EXPECT_THROW(GammaParams(1.0, -1.0), DomainError);
    EXPECT_THROW(GammaParams(NAN, 1.0), DomainError);
    EXPECT_THROW(gamma_quantile({1.0, 1.0}, 1.0), DomainError);
}

TEST(Gamma, QuantileInvertsCdf) {
    for (const GammaParams g : {GammaParams{0.5, 0.2}, GammaParams{1.426, 0.148}, GammaParams{6.0, 0.02}}) {
        for (double p : {1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-10}) EXPECT_NEAR(gamma_cdf(g, gamma_quantile(g, p)), p, 1e-12);
    }
}

TEST(Gamma, SamplerMoments) {
    for (const GammaParams g : {GammaParams{0.906, 0.156}, GammaParams{2.735, 0.103}}) {
        RandomStream s(5, 0);
        const int n = 400000;
        double m1 = 0, m2 = 0;
        for (int i = 0; i < n; ++i) {
            const double y = gamma_sample(g, s);
            ASSERT_GT(y, 0.0);
            m1 += y, m2 += y * y;
        }
        m1 /= n, m2 /= n;
        EXPECT_NEAR(m1, g.mean(), 4.0 * std::sqrt(g.variance() / n));
        EXPECT_NEAR(m2 - m1 * m1, g.variance(), 0.02 * g.variance());
    }
}

TEST(Gamma, SamplerMatchesCdf) {
    const GammaParams g{0.906, 0.156};
    RandomStream s(9, 0);
    const int n = 200000;
    const double cuts[] = {0.01, 0.05, 0.1, 0.2, 0.4};
    int below[5] = {};
    for (int i = 0; i < n; ++i) {
        const double y = gamma_sample(g, s);
        for (int k = 0; k < 5; ++k) below[k] += y < cuts[k];
    }
    for (int k = 0; k < 5; ++k) {
        const double p = gamma_cdf(g, cuts[k]);
        EXPECT_NEAR(below[k] / double(n), p, 4.0 * std::sqrt(p * (1 - p) / n));
    }
}

TEST(Quadrature, FiveNodeReference) {
    const auto g = build_grid(5, -1.0, 1.0);
    EXPECT_NEAR(g.nodes[0], -0.9061798459386639928, 1e-15);
    EXPECT_NEAR(g.nodes[1], -0.5384693101056830910, 1e-15);
    EXPECT_NEAR(g.nodes[2], 0.0, 1e-15);
    EXPECT_NEAR(g.nodes[4], 0.9061798459386639928, 1e-15);
    EXPECT_NEAR(g.weights[2], 128.0 / 225.0, 1e-15);
}

TEST(Quadrature, ExactForPolynomials) {
    for (std::size_t n : {2u, 7u, 32u, 128u}) {
        const auto g = build_grid(n, 0.5, 2.0);
        const int degree = static_cast<int>(2 * n - 1);
        const double exact = (std::pow(2.0, degree + 1) - std::pow(0.5, degree + 1)) / (degree + 1);
        EXPECT_NEAR(g.integrate([&](double x) { return std::pow(x, degree); }) / exact, 1.0, 1e-12) << n;
    }
}

TEST(Quadrature, Errors) {
    EXPECT_THROW(build_grid(1, 0.0, 1.0), DomainError);
    EXPECT_THROW(build_grid(8, 1.0, 1.0), DomainError);
}

TEST(Quadrature, GammaMeasureNormalizesAndReproducesMoments) {
    for (const GammaParams g : {GammaParams{0.5, 0.3}, GammaParams{0.906, 0.156}, GammaParams{1.426, 0.148},
                                GammaParams{4.762, 0.044}}) {
        const auto m = build_gamma_measure_grid(g, 128);
        double mass = 0.0, mean = 0.0, second = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) {
            mass += m.weights[j];
            mean += m.weights[j] * m.nodes[j];
            second += m.weights[j] * m.nodes[j] * m.nodes[j];
        }
        EXPECT_NEAR(mass, 1.0, 1e-8);
        EXPECT_NEAR(mean / g.mean(), 1.0, 1e-8);
        EXPECT_NEAR((second - mean * mean) / g.variance(), 1.0, 1e-7);
    }
}
