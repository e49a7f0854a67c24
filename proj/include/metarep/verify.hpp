#pragma once

// Invariant suite run by `metarep verify`. Each check returns pass/fail and a
// one-line detail with the worst observed discrepancy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "metarep/estimator.hpp"
#include "metarep/io.hpp"
#include "metarep/replication_model.hpp"
#include "metarep/selection_model.hpp"
#include "metarep/simulator.hpp"

namespace metarep {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t n_draws = 2'000'000;
    std::uint64_t seed = 0;
    std::size_t random_models = 10;
};

// Latent models drawn uniformly from plausible Fisher-z ranges.
inline std::vector<LatentModel> random_latent_models(std::size_t count, std::uint64_t seed) {
    RandomStream s(seed, 0x1a7e);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * s.uniform(); };
    std::vector<LatentModel> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double ts = between(0.5, 3.0), tl = between(0.05, 0.3);
        const double ss = between(1.5, 6.0), sl = between(0.02, 0.15);
        out.push_back({{ts, tl}, {ss, sl}});
    }
    return out;
}

namespace detail {

inline std::string fmt(double v) { return format_number(v); }

inline double rp_common(double x, double theta, double power) {
    return rp(x, theta, common_power_sigma(x, power).sigma_r());
}

}  // namespace detail

inline CheckResult check_rp_at_truth() {
    double worst = 0.0;
    for (double theta : {0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 2.0, 5.0}) {
        for (double p : {0.5, 0.8, 0.8314, 0.9, 0.95}) {
            worst = std::max(worst, std::abs(detail::rp_common(theta, theta, p) - p));
        }
    }
    return {"rp_at_truth_equals_power", worst < 1e-10, "max |rp - power| = " + detail::fmt(worst)};
}

// Finite differences of 1 - rp for x > 0, where rp itself saturates near 1.
inline CheckResult check_rp_derivatives() {
    double worst = 0.0;
    for (double theta : {0.1, 0.5, 1.0}) {
        for (double p : {0.8, 0.9, 0.95}) {
            const double mult = kCriticalT + norm_quantile(p);
            auto smooth = [&](double x) {
                return x > 0.0 ? -norm_cdf(kCriticalT - theta * mult / x) : detail::rp_common(x, theta, p);
            };
            for (double ratio : {-3.0, -1.0, -0.3, 0.3, 0.7, 1.0, 1.5, 3.0}) {
                const double x = ratio * theta;
                const double h = 1e-5 * std::abs(x);
                const double fd1 = (smooth(x + h) - smooth(x - h)) / (2 * h);
                const double d1 = rp_first_deriv(x, theta, p);
                if (d1 != 0.0) worst = std::max(worst, std::abs(fd1 - d1) / std::abs(d1));
                if (x > 0.0) {
                    const double fd2 = (rp_first_deriv(x + h, theta, p) - rp_first_deriv(x - h, theta, p)) / (2 * h);
                    const double d2 = rp_second_deriv(x, theta, p);
                    if (d2 != 0.0) worst = std::max(worst, std::abs(fd2 - d2) / std::abs(d2));
                }
            }
        }
    }
    return {"rp_derivatives_match_finite_differences", worst < 1e-4, "max relative error = " + detail::fmt(worst)};
}

inline CheckResult check_concavity() {
    double largest = -INFINITY;
    for (double p : {0.85, 0.90, 0.92, 0.95}) {
        for (double theta : {0.05, 0.2, 1.0, 3.0}) {
            const auto [lo, hi] = concavity_interval(theta, p);
            for (int i = 1; i < 50; ++i) {
                const double x = lo + (hi - lo) * i / 50.0;
                largest = std::max(largest, rp_second_deriv(x, theta, p));
            }
        }
    }
    return {"rp_concave_on_interval", largest < 0.0, "max second derivative = " + detail::fmt(largest)};
}

inline CheckResult check_rp_limits() {
    const double tail = norm_cdf(-kCriticalT);
    double worst = 0.0;
    for (double theta : {0.1, 1.0}) {
        for (double p : {0.8, 0.92}) {
            worst = std::max(worst, std::abs(detail::rp_common(1e9, theta, p) - tail));
            worst = std::max(worst, std::abs(detail::rp_common(-1e9, theta, p) - tail));
            worst = std::max(worst, std::abs(detail::rp_common(-1e-9, theta, p) - 0.0));
            worst = std::max(worst, std::abs(detail::rp_common(1e-9, theta, p) - 1.0));
        }
    }
    return {"rp_limits", worst < 1e-6, "max deviation = " + detail::fmt(worst)};
}

// Replication rate unaffected by the weight on insignificant results.
inline CheckResult check_publication_invariance(const VerifyOptions& o) {
    std::vector<LatentModel> models{econ_table1().latent, psych_table1().latent};
    for (const auto& m : random_latent_models(o.random_models, o.seed)) models.push_back(m);
    std::vector<StepPolicy> policies;
    for (double w : {0.0, 0.2, 1.0, 5.0}) policies.emplace_back(std::vector<double>{1.64, 1.96}, std::vector<double>{w, w, 1.0});
    double worst = 0.0;
    for (const auto& m : models) {
        const auto res = simulate_policies(GammaLatentSampler{m}, policies, CommonMean{0.92}, o.n_draws, o.seed);
        double lo = 1.0, hi = 0.0;
        for (const auto& r : res) lo = std::min(lo, r.replication_rate), hi = std::max(hi, r.replication_rate);
        worst = std::max(worst, hi - lo);
    }
    return {"replication_rate_invariant_to_insignificant_weight", worst < 0.005, "max spread = " + detail::fmt(worst)};
}

// Significant originals overstate the truth; replications are unbiased for it.
inline CheckResult check_regression_to_mean(const VerifyOptions& o) {
    bool ok = true;
    double worst_z = 0.0;
    const StepPolicy policies[] = {regime_policy(SignificantOnly{})};
    for (double theta : {0.5, 1.0, 2.0, 3.0}) {
        for (double sigma : {0.5, 1.0}) {
            const auto m = simulate_policies(PointLatentSampler{theta, sigma}, policies, CommonMean{0.9},
                                             std::max<std::uint64_t>(o.n_draws / 4, kMinDraws), o.seed)
                               .front();
            const double z = std::abs(m.mean_xr_significant - theta) / m.mean_xr_significant_se;
            worst_z = std::max(worst_z, z);
            ok = ok && m.mean_x_significant > theta && z < 3.0;
        }
    }
    return {"significant_originals_regress_to_mean", ok, "max |E(X_r) - theta| / se = " + detail::fmt(worst_z)};
}

inline CheckResult check_power_bound(const VerifyOptions& o) {
    std::vector<LatentModel> models{econ_table1().latent, psych_table1().latent};
    for (const auto& m : random_latent_models(o.random_models, o.seed + 1)) models.push_back(m);
    const StepPolicy policies[] = {econ_table1().policy};
    double worst = -INFINITY;
    for (double power : {0.8314, 0.85, 0.90, 0.92, 0.95}) {
        for (const auto& m : models) {
            const auto r = simulate_policies(GammaLatentSampler{m}, policies, CommonMean{power}, o.n_draws / 4, o.seed)
                               .front();
            worst = std::max(worst, r.replication_rate + 3.0 * r.mc_se - power);
        }
    }
    return {"replication_rate_below_intended_power", worst < 0.0, "max (rr + 3 se - power) = " + detail::fmt(worst)};
}

// Probability of boxes in (x, sigma) under the likelihood against simulated counts.
inline CheckResult check_likelihood_vs_simulation(const VerifyOptions& o) {
    const LatentModel latent = econ_table1().latent;
    ModelSpec spec;
    const ModelParams params{latent, StepPolicy{{1.64, 1.96}, {1.0, 1.0, 1.0}}};
    const double xs[] = {-0.2, 0.0, 0.2, 0.4, 0.7};
    const double ss[] = {0.15, 0.25, 0.35, 0.5};
    const double hx = 0.05, hs = 0.025;
    std::vector<double> counts(20, 0.0);
    const std::uint64_t n = o.n_draws;
    RandomStream stream(o.seed, 0xd05e);
    const GammaLatentSampler sampler{latent};
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto d = draw_study(sampler, stream);
        for (int a = 0; a < 5; ++a) {
            if (std::abs(d.x - xs[a]) >= hx) continue;
            for (int b = 0; b < 4; ++b) {
                if (std::abs(d.sigma - ss[b]) < hs) counts[a * 4 + b] += 1.0;
            }
        }
    }
    const auto gl = build_grid(6, -1.0, 1.0);
    double worst = 0.0;
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 4; ++b) {
            Dataset box;
            for (std::size_t i = 0; i < gl.size(); ++i) {
                for (std::size_t k = 0; k < gl.size(); ++k) {
                    box.records.push_back({std::to_string(i * 8 + k), xs[a] + hx * gl.nodes[i], ss[b] + hs * gl.nodes[k]});
                }
            }
            const auto ll = record_log_likelihoods(params, spec, box);
            double prob = 0.0;
            for (std::size_t i = 0; i < gl.size(); ++i) {
                for (std::size_t k = 0; k < gl.size(); ++k) prob += gl.weights[i] * gl.weights[k] * std::exp(ll[i * gl.size() + k]);
            }
            prob *= hx * hs;
            const double empirical = counts[a * 4 + b] / static_cast<double>(n);
            worst = std::max(worst, std::abs(empirical / prob - 1.0));
        }
    }
    return {"likelihood_matches_simulation", worst < 0.05, "max relative box error = " + detail::fmt(worst)};
}

inline CheckResult check_worked_example(const VerifyOptions& o) {
    struct Expect {
        Regime regime;
        double mean_x, bias;
    };
    const Expect rows[] = {{NoBias{}, 2.50, 0.00}, {SignificantOnly{}, 2.99, 0.49}, {InsignificantFavored{5.0}, 1.87, -0.63}};
    double worst = 0.0;
    for (const auto& e : rows) {
        const auto r = simple_example(e.regime, 1'000'000, o.seed);
        worst = std::max({worst, std::abs(r.mean_x - e.mean_x), std::abs(r.bias - e.bias),
                          std::abs(r.mean_x_significant - 2.99), std::abs(r.mean_xr_significant - 2.50),
                          std::abs(r.replication_rate - 0.77)});
    }
    return {"worked_example_table", worst <= 0.01, "max deviation = " + detail::fmt(worst)};
}

inline std::vector<CheckResult> run_verification(const VerifyOptions& o = {}) {
    return {check_rp_at_truth(),
            check_rp_derivatives(),
            check_concavity(),
            check_rp_limits(),
            check_publication_invariance(o),
            check_regression_to_mean(o),
            check_power_bound(o),
            check_likelihood_vs_simulation(o),
            check_worked_example(o)};
}

}  // namespace metarep
