#pragma once

// Special functions, gamma sampling and Gauss-Legendre quadrature.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "metarep/error.hpp"
#include "metarep/random.hpp"

namespace metarep {

// Gamma distribution with shape k and SCALE lambda (mean = k * lambda).
struct GammaParams {
    double shape = 1.0;
    double scale = 1.0;

    GammaParams() = default;
    GammaParams(double shape_, double scale_) : shape(shape_), scale(scale_) {
        if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale) ||
            !std::isfinite(shape * scale)) {
            throw DomainError("GammaParams: shape and scale must be positive and finite (got shape=" +
                              std::to_string(shape) + ", scale=" + std::to_string(scale) + ")");
        }
    }

    double mean() const { return shape * scale; }
    double variance() const { return shape * scale * scale; }

    friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

inline double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double norm_cdf(double z) {
    if (!std::isfinite(z)) throw DomainError("norm_cdf: argument must be finite");
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Unchecked variant for inner loops where the argument is known to be finite.
inline double norm_cdf_unchecked(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile: p must lie in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// ---------------------------------------------------------------------------
// Gamma distribution
// ---------------------------------------------------------------------------

inline double gamma_log_pdf(const GammaParams& g, double x) {
    if (!(x > 0.0)) return -INFINITY;
    return (g.shape - 1.0) * std::log(x) - x / g.scale - std::lgamma(g.shape) - g.shape * std::log(g.scale);
}

inline double gamma_pdf(const GammaParams& g, double x) { return std::exp(gamma_log_pdf(g, x)); }

inline double gamma_cdf(const GammaParams& g, double x) {
    if (!(x > 0.0)) return 0.0;
    return boost::math::gamma_p(g.shape, x / g.scale);
}

inline double gamma_quantile(const GammaParams& g, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("gamma_quantile: p must lie in (0, 1)");
    return g.scale * boost::math::gamma_p_inv(g.shape, p);
}

// Marsaglia & Tsang (2000) squeeze method; shape < 1 uses the U^(1/shape) boost.
inline double gamma_sample(const GammaParams& g, RandomStream& stream) {
    if (g.shape < 1.0) {
        const double boosted = gamma_sample(GammaParams{g.shape + 1.0, g.scale}, stream);
        return boosted * std::pow(stream.uniform(), 1.0 / g.shape);
    }
    const double d = g.shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double z = stream.normal();
        double v = 1.0 + c * z;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = stream.uniform();
        const double z2 = z * z;
        if (u < 1.0 - 0.0331 * z2 * z2) return d * v * g.scale;
        if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return d * v * g.scale;
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double lower = 0.0;
    double upper = 1.0;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double total = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) total += weights[i] * f(nodes[i]);
        return total;
    }
};

// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree <= 2n-1.
inline QuadratureGrid build_grid(std::size_t n, double a, double b) {
    if (n < 2) throw DomainError("build_grid: need at least 2 nodes");
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw DomainError("build_grid: need finite a < b");

    QuadratureGrid grid;
    grid.lower = a;
    grid.upper = b;
    grid.nodes.resize(n);
    grid.weights.resize(n);
    const double half_width = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        grid.nodes[i] = mid - half_width * x;
        grid.nodes[n - 1 - i] = mid + half_width * x;
        grid.weights[i] = half_width * w;
        grid.weights[n - 1 - i] = half_width * w;
    }
    return grid;
}

// Discretisation of a gamma measure: sum_j weights[j] * f(nodes[j]) ~= E[f(Y)].
//
// Nodes cover [0, gamma_quantile(g, 1 - tail)] through the substitution
// y = Q * u^4, u in [0, 1]. The Jacobian 4 Q u^3 turns the y^(shape-1) endpoint
// behaviour into u^(4 shape - 1), which is smooth enough for Gauss-Legendre even
// when shape < 1.
struct MeasureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double upper = 0.0;

    std::size_t size() const { return nodes.size(); }
};

inline constexpr int kGammaGridPower = 4;

inline MeasureGrid build_gamma_measure_grid(const GammaParams& g, std::size_t n, double tail = 1e-10) {
    const QuadratureGrid unit = build_grid(n, 0.0, 1.0);
    MeasureGrid out;
    out.upper = gamma_quantile(g, 1.0 - tail);
    out.nodes.resize(n);
    out.weights.resize(n);
    const double log_norm = std::lgamma(g.shape) + g.shape * std::log(g.scale);
    for (std::size_t j = 0; j < n; ++j) {
        const double u = unit.nodes[j];
        const double u3 = u * u * u;
        const double y = out.upper * u3 * u;
        const double jacobian = kGammaGridPower * out.upper * u3;
        out.nodes[j] = y;
        const double log_density = (g.shape - 1.0) * std::log(y) - y / g.scale - log_norm;
        out.weights[j] = unit.weights[j] * jacobian * std::exp(log_density);
    }
    return out;
}

}  // namespace metarep
