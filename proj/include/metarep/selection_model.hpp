#pragma once

// Step-function publication x replication-selection policies over |t| bands.
//
// A policy with cutoffs c_1 < ... < c_k has k + 1 bands; band b holds
// |t| in [c_b, c_{b+1}) with c_0 = 0 and c_{k+1} = inf, so a t-ratio that equals
// a cutoff belongs to the upper band. Only the product p() * r() is modelled,
// and only weight ratios are identified; the top band is conventionally 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "metarep/error.hpp"
#include "metarep/stats_core.hpp"

namespace metarep {

class StepPolicy {
public:
    StepPolicy() : weights_{1.0} {}

    StepPolicy(std::vector<double> cutoffs, std::vector<double> weights)
        : cutoffs_(std::move(cutoffs)), weights_(std::move(weights)) {
        if (weights_.size() != cutoffs_.size() + 1) {
            throw ConfigError("StepPolicy: need exactly one weight per band (cutoffs + 1)");
        }
        for (std::size_t i = 0; i < cutoffs_.size(); ++i) {
            if (!(cutoffs_[i] > 0.0) || !std::isfinite(cutoffs_[i])) {
                throw ConfigError("StepPolicy: cutoffs must be positive and finite");
            }
            if (i > 0 && !(cutoffs_[i] > cutoffs_[i - 1])) {
                throw ConfigError("StepPolicy: cutoffs must be strictly ascending");
            }
        }
        for (double w : weights_) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("StepPolicy: weights must be finite and >= 0");
        }
        if (!(weights_.back() > 0.0)) throw ConfigError("StepPolicy: top-band weight must be positive");
    }

    const std::vector<double>& cutoffs() const { return cutoffs_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t band_count() const { return weights_.size(); }

    std::size_t band_index(double t) const {
        const double abs_t = std::abs(t);
        return static_cast<std::size_t>(std::upper_bound(cutoffs_.begin(), cutoffs_.end(), abs_t) - cutoffs_.begin());
    }

    double weight(double t) const { return weights_[band_index(t)]; }

    double max_weight() const { return *std::max_element(weights_.begin(), weights_.end()); }

    bool is_normalized() const { return weights_.back() == 1.0; }

    StepPolicy normalized() const {
        std::vector<double> w = weights_;
        const double top = w.back();
        for (double& v : w) v /= top;
        return StepPolicy{cutoffs_, std::move(w)};
    }

    StepPolicy scaled(double factor) const {
        if (!(factor > 0.0)) throw ConfigError("StepPolicy::scaled: factor must be positive");
        std::vector<double> w = weights_;
        for (double& v : w) v *= factor;
        return StepPolicy{cutoffs_, std::move(w)};
    }

    friend bool operator==(const StepPolicy&, const StepPolicy&) = default;

private:
    std::vector<double> cutoffs_;
    std::vector<double> weights_;
};

inline double policy_weight(const StepPolicy& policy, double t) { return policy.weight(t); }

struct NoBias {};
struct SignificantOnly {};
struct InsignificantFavored {
    double factor = 5.0;
};
struct CustomRegime {
    StepPolicy policy;
};

using Regime = std::variant<NoBias, SignificantOnly, InsignificantFavored, CustomRegime>;

inline StepPolicy regime_policy(const Regime& regime) {
    return std::visit(
        [](const auto& r) -> StepPolicy {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, NoBias>) {
                return StepPolicy{};
            } else if constexpr (std::is_same_v<R, SignificantOnly>) {
                return StepPolicy{{1.64, 1.96}, {0.0, 0.0, 1.0}};
            } else if constexpr (std::is_same_v<R, InsignificantFavored>) {
                if (!(r.factor > 0.0)) throw ConfigError("InsignificantFavored: factor must be positive");
                return StepPolicy{{1.64, 1.96}, {r.factor, r.factor, 1.0}};
            } else {
                return r.policy;
            }
        },
        regime);
}

// P(|X/sigma| < c) for X ~ N(theta, sigma^2).
inline double central_mass(double mean_t, double c) {
    return norm_cdf_unchecked(c - mean_t) - norm_cdf_unchecked(-c - mean_t);
}

// E[weight(X / sigma)] for X ~ N(theta, sigma^2), from normal CDF differences:
//   w_top + sum_b (w_b - w_{b+1}) P(|T| < c_b).
inline double band_probability(double theta, double sigma, const StepPolicy& policy) {
    if (!(sigma > 0.0)) throw DomainError("band_probability: sigma must be positive");
    const auto& c = policy.cutoffs();
    const auto& w = policy.weights();
    const double mean_t = theta / sigma;
    double total = w.back();
    for (std::size_t b = 0; b < c.size(); ++b) {
        const double step = w[b] - w[b + 1];
        if (step != 0.0) total += step * central_mass(mean_t, c[b]);
    }
    return std::max(total, 0.0);
}

inline void to_json(nlohmann::json& j, const StepPolicy& p) {
    j = nlohmann::json{{"cutoffs", p.cutoffs()}, {"weights", p.weights()}};
}

inline void from_json(const nlohmann::json& j, StepPolicy& p) {
    if (!j.is_object() || !j.contains("cutoffs") || !j.contains("weights")) {
        throw ConfigError("policy JSON must be an object with 'cutoffs' and 'weights'");
    }
    p = StepPolicy{j.at("cutoffs").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>()};
}

}  // namespace metarep
