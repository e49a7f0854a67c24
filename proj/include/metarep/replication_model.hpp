#pragma once

// Replication probability, replication power rules and the analytic
// properties of the replication probability under the common power rule.
//
// Effects are on the Fisher-z scale. A replication "succeeds" when
// |X_r| / sigma_r >= 1.96 and sign(X_r) == sign(x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "metarep/error.hpp"
#include "metarep/random.hpp"
#include "metarep/stats_core.hpp"

namespace metarep {

inline constexpr double kCriticalT = 1.96;

// sigma_r = |x| / (1.96 - Phi^{-1}(1 - power)) for every replication.
struct CommonMean {
    double intended_power = 0.92;
};

// sigma_r = |x| / ratio with ratio drawn uniformly from observed |x| / sigma_r.
struct CommonRealized {
    std::vector<double> ratio_pool;
};

// sigma_r = sigma (replication repeats the original design).
struct OriginalPower {};

using PowerRule = std::variant<CommonMean, CommonRealized, OriginalPower>;

inline void validate(const PowerRule& rule) {
    if (const auto* mean = std::get_if<CommonMean>(&rule)) {
        if (!(mean->intended_power > 0.025 && mean->intended_power < 1.0)) {
            throw ConfigError("CommonMean: intended power must lie in (0.025, 1)");
        }
    } else if (const auto* realized = std::get_if<CommonRealized>(&rule)) {
        if (realized->ratio_pool.empty()) throw ConfigError("CommonRealized: ratio pool is empty");
        for (double r : realized->ratio_pool) {
            if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("CommonRealized: ratios must be positive and finite");
        }
    }
}

class ReplicationDesign {
public:
    explicit ReplicationDesign(double sigma_r) : sigma_r_(sigma_r) {
        if (!(sigma_r > 0.0) || !std::isfinite(sigma_r)) {
            throw DomainError("ReplicationDesign: sigma_r must be positive and finite");
        }
    }
    double sigma_r() const { return sigma_r_; }

private:
    double sigma_r_;
};

// h(power) = 1.96 - Phi^{-1}(beta) with beta = 1 - power.
inline double power_multiplier(double intended_power) {
    return kCriticalT - norm_quantile(1.0 - intended_power);
}

inline double sign_of(double x) { return x > 0.0 ? 1.0 : -1.0; }

inline double rp(double x, double theta, double sigma_r) {
    if (!(sigma_r > 0.0)) throw DomainError("rp: sigma_r must be positive");
    if (x == 0.0) throw DomainError("rp: original effect x must be nonzero");
    return norm_cdf(sign_of(x) * theta / sigma_r - kCriticalT);
}

inline ReplicationDesign common_power_sigma(double x, double intended_power) {
    if (!(intended_power > 0.025 && intended_power < 1.0)) {
        throw DomainError("common_power_sigma: intended power must lie in (0.025, 1)");
    }
    if (x == 0.0 || !std::isfinite(x)) throw DomainError("common_power_sigma: x must be nonzero and finite");
    return ReplicationDesign{std::abs(x) / power_multiplier(intended_power)};
}

// Variant taking the pool-selection uniform explicitly, so callers can fix the
// draw order of a simulation independently of the rule in use.
inline ReplicationDesign replication_sigma(const PowerRule& rule, double x, double sigma, double pool_uniform) {
    return std::visit(
        [&](const auto& r) -> ReplicationDesign {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, CommonMean>) {
                return common_power_sigma(x, r.intended_power);
            } else if constexpr (std::is_same_v<R, CommonRealized>) {
                if (r.ratio_pool.empty()) throw ConfigError("CommonRealized: ratio pool is empty");
                auto index = static_cast<std::size_t>(pool_uniform * static_cast<double>(r.ratio_pool.size()));
                if (index >= r.ratio_pool.size()) index = r.ratio_pool.size() - 1;
                return ReplicationDesign{std::abs(x) / r.ratio_pool[index]};
            } else {
                return ReplicationDesign{sigma};
            }
        },
        rule);
}

inline ReplicationDesign replication_sigma(const PowerRule& rule, double x, double sigma, RandomStream& stream) {
    return replication_sigma(rule, x, sigma, stream.uniform());
}

// d RP(x, theta, sigma_r(x, power)) / dx under the common power rule, x != 0.
inline double rp_first_deriv(double x, double theta, double intended_power) {
    if (x == 0.0) throw DomainError("rp_first_deriv: x must be nonzero");
    const double h = power_multiplier(intended_power);
    const double u = h * theta / std::abs(x);
    const double arg = x > 0.0 ? kCriticalT - u : -kCriticalT - u;
    return -(theta / (x * x)) * h * norm_pdf(arg);
}

// Second derivative in x for x > 0 under the common power rule:
//   (h theta / x^3) phi(1.96 - u) [2 + u (1.96 - u)],  u = h theta / x.
inline double rp_second_deriv(double x, double theta, double intended_power) {
    if (!(x > 0.0)) throw DomainError("rp_second_deriv: x must be positive");
    const double h = power_multiplier(intended_power);
    const double u = h * theta / x;
    return (u / (x * x)) * norm_pdf(kCriticalT - u) * (2.0 + u * (kCriticalT - u));
}

// Smallest h for which a positive concavity radius exists: root of
// 2 + 1.96 h - h^2 = 0.
inline double concavity_threshold_multiplier() {
    return 0.5 * (kCriticalT + std::sqrt(kCriticalT * kCriticalT + 8.0));
}

// Intended power above which concavity_radius is defined (about 0.7705).
inline double concavity_threshold_power() {
    return norm_cdf(concavity_threshold_multiplier() - kCriticalT);
}

// Positive root r* of 2 r^2 + (4 + 1.96 h) r + (2 + 1.96 h - h^2) = 0.
// The second derivative is negative for x in (0, (1 + r*) theta).
inline double concavity_radius(double intended_power) {
    if (!(intended_power > 0.025 && intended_power < 1.0)) {
        throw DomainError("concavity_radius: intended power must lie in (0.025, 1)");
    }
    const double h = power_multiplier(intended_power);
    const double a = 2.0;
    const double b = 4.0 + kCriticalT * h;
    const double c = 2.0 + kCriticalT * h - h * h;
    if (!(c < 0.0)) {
        throw DomainError("concavity_radius: no positive root for intended power <= " +
                          std::to_string(concavity_threshold_power()));
    }
    // Citardauq form avoids cancellation when c is close to 0.
    return (2.0 * c) / (-b - std::sqrt(b * b - 4.0 * a * c));
}

// Open interval (max{0, (1 - r*) theta}, (1 + r*) theta).
inline std::pair<double, double> concavity_interval(double theta, double intended_power) {
    const double r = concavity_radius(intended_power);
    return {std::max(0.0, (1.0 - r) * theta), (1.0 + r) * theta};
}

// Significant originals: same-sign significance. Insignificant originals:
// insignificance of the replication.
inline double generalized_rp(double x, double sigma, double theta, double sigma_r) {
    if (!(sigma > 0.0)) throw DomainError("generalized_rp: sigma must be positive");
    if (!(sigma_r > 0.0)) throw DomainError("generalized_rp: sigma_r must be positive");
    if (std::abs(x) >= kCriticalT * sigma) return rp(x, theta, sigma_r);
    return norm_cdf(kCriticalT - theta / sigma_r) - norm_cdf(-kCriticalT - theta / sigma_r);
}

}  // namespace metarep
