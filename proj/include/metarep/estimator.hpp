#pragma once

// Maximum likelihood for the latent gamma model with step-function
// publication, fitted to published (x, sigma) pairs.
//
// For a published record the density is
//   f(x, s) = w(x / s) * [int g_theta(t) phi((x - t) / s) / s dt] * g_sigma(s) / D
// with D = E[w(X / Sigma)] over the latent model. Only weight ratios enter f,
// so the top band is pinned at 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "metarep/error.hpp"
#include "metarep/optimizer.hpp"
#include "metarep/random.hpp"
#include "metarep/selection_model.hpp"
#include "metarep/simulator.hpp"
#include "metarep/stats_core.hpp"

namespace metarep {

struct DataRecord {
    std::string study_id;
    double x = 0.0;
    double sigma = 1.0;
};

struct Dataset {
    std::vector<DataRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

inline void validate(const Dataset& data) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& r = data.records[i];
        if (!(r.sigma > 0.0) || !std::isfinite(r.sigma)) {
            throw DataError("record " + std::to_string(i + 1) + " (" + r.study_id + "): sigma must be positive");
        }
        if (!std::isfinite(r.x)) throw DataError("record " + std::to_string(i + 1) + " (" + r.study_id + "): x not finite");
        if (!seen.insert(r.study_id).second) throw DataError("duplicate study_id '" + r.study_id + "'");
    }
}

struct ModelSpec {
    std::vector<double> cutoffs{1.64, 1.96};
    // One entry per band below the top band; a value fixes that weight.
    std::vector<std::optional<double>> fixed_weights{std::nullopt, std::nullopt};
    std::size_t theta_nodes = 128;      // denominator grid over theta
    std::size_t sigma_nodes = 128;      // denominator grid over sigma
    std::size_t numerator_nodes = 48;   // per-record convolution over theta
    double tail = 1e-10;                // truncation quantile of the gamma grids

    std::size_t band_count() const { return cutoffs.size() + 1; }
};

inline void validate(const ModelSpec& spec) {
    StepPolicy probe(spec.cutoffs, std::vector<double>(spec.cutoffs.size() + 1, 1.0));
    if (spec.fixed_weights.size() != spec.cutoffs.size()) {
        throw ConfigError("ModelSpec: need one fixed_weights entry per band below the top band");
    }
    for (const auto& w : spec.fixed_weights) {
        if (w && (!(*w >= 0.0) || !std::isfinite(*w))) throw ConfigError("ModelSpec: fixed weights must be >= 0");
    }
    if (spec.theta_nodes < 8 || spec.sigma_nodes < 8 || spec.numerator_nodes < 8) {
        throw ConfigError("ModelSpec: quadrature needs at least 8 nodes");
    }
    if (!(spec.tail > 0.0 && spec.tail < 1e-3)) throw ConfigError("ModelSpec: tail must lie in (0, 1e-3)");
}

// Spec with the given lower bands fixed; the economics fits fix band 0 at 0.
inline ModelSpec spec_with_fixed(std::vector<std::pair<std::size_t, double>> fixes) {
    ModelSpec spec;
    for (auto [band, value] : fixes) {
        if (band >= spec.fixed_weights.size()) throw ConfigError("band index out of range for fixing");
        spec.fixed_weights[band] = value;
    }
    return spec;
}

struct ModelParams {
    LatentModel latent;
    StepPolicy policy;
};

struct MleResult {
    ModelParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    std::map<std::string, double> robust_se;  // free parameters only; empty if the sandwich failed
    std::string se_diagnostic;
    bool converged = false;
    std::size_t n_evals = 0;
    std::size_t n_starts = 0;
    std::vector<double> start_logliks;
};

// ---------------------------------------------------------------------------
// Parameter vector (log space)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::size_t> free_bands(const ModelSpec& spec) {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < spec.fixed_weights.size(); ++b) {
        if (!spec.fixed_weights[b]) out.push_back(b);
    }
    return out;
}

inline ModelParams unpack(const std::vector<double>& v, const ModelSpec& spec) {
    const auto bands = free_bands(spec);
    std::vector<double> w(spec.band_count(), 1.0);
    for (std::size_t b = 0; b < spec.fixed_weights.size(); ++b) {
        if (spec.fixed_weights[b]) w[b] = *spec.fixed_weights[b];
    }
    for (std::size_t i = 0; i < bands.size(); ++i) w[bands[i]] = std::exp(v[4 + i]);
    return {{{std::exp(v[0]), std::exp(v[1])}, {std::exp(v[2]), std::exp(v[3])}}, StepPolicy{spec.cutoffs, w}};
}

inline std::vector<double> pack(const ModelParams& p, const ModelSpec& spec) {
    std::vector<double> v{std::log(p.latent.theta.shape), std::log(p.latent.theta.scale),
                          std::log(p.latent.sigma.shape), std::log(p.latent.sigma.scale)};
    const double top = p.policy.weights().back();
    for (std::size_t b : free_bands(spec)) v.push_back(std::log(p.policy.weights()[b] / top));
    return v;
}

// Runs fn(begin, end) over [0, n) in contiguous blocks.
template <class Fn>
void parallel_blocks(std::size_t n, unsigned threads, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_thread_count(threads), (n + 1023) / 1024));
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex m;
    const std::size_t block = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * block, end = std::min(n, begin + block);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct UnitRule {
    QuadratureGrid grid;
    std::vector<double> log_weights;
    std::vector<double> log_nodes;
};

inline const UnitRule& unit_rule(std::size_t n) {
    static std::mutex m;
    static std::map<std::size_t, UnitRule> cache;
    std::lock_guard lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) {
        UnitRule rule{build_grid(n, 0.0, 1.0), {}, {}};
        for (std::size_t j = 0; j < n; ++j) {
            rule.log_weights.push_back(std::log(rule.grid.weights[j]));
            rule.log_nodes.push_back(std::log(rule.grid.nodes[j]));
        }
        it = cache.emplace(n, std::move(rule)).first;
    }
    return it->second;
}

inline double log_sum_exp(const double* v, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

}  // namespace detail

inline std::vector<std::string> parameter_names(const ModelSpec& spec) {
    std::vector<std::string> names{"theta_shape", "theta_scale", "sigma_shape", "sigma_scale"};
    for (std::size_t b : detail::free_bands(spec)) names.push_back("weight_" + std::to_string(b));
    return names;
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

// E[w(X / Sigma)] over the latent model, by a tensor grid on the two gamma measures.
inline double selection_normalizer(const LatentModel& latent, const StepPolicy& policy, const ModelSpec& spec) {
    const MeasureGrid gt = build_gamma_measure_grid(latent.theta, spec.theta_nodes, spec.tail);
    const MeasureGrid gs = build_gamma_measure_grid(latent.sigma, spec.sigma_nodes, spec.tail);
    double total = 0.0;
    for (std::size_t k = 0; k < gs.size(); ++k) {
        double inner = 0.0;
        for (std::size_t j = 0; j < gt.size(); ++j) inner += gt.weights[j] * band_probability(gt.nodes[j], gs.nodes[k], policy);
        total += gs.weights[k] * inner;
    }
    return total;
}

// log of int_0^inf g(t) phi((x - t) / s) / s dt.
inline double log_convolution_density(const GammaParams& g, double x, double s, std::size_t nodes, double upper) {
    const auto& rule = detail::unit_rule(nodes);
    double lo = std::max(0.0, x - 10.0 * s);
    double hi = x + 10.0 * s;
    if (x < 0.0) hi = std::max(hi, 40.0 * s * s / -x);
    if (lo < upper) hi = std::min(hi, upper);
    if (!(hi > lo)) hi = lo + 10.0 * s;

    const double log_norm = std::lgamma(g.shape) + g.shape * std::log(g.scale);
    const double shape_m1 = g.shape - 1.0;
    const double inv_scale = 1.0 / g.scale;
    const double inv_s = 1.0 / s;
    thread_local std::vector<double> terms;
    terms.resize(nodes);
    if (lo == 0.0) {
        // t = hi * u^4 keeps t^(shape - 1) integrable for Gauss-Legendre.
        const double log_hi = std::log(hi);
        const double base = std::log(static_cast<double>(kGammaGridPower)) + log_hi + shape_m1 * log_hi - log_norm;
        const double log_u_power = 3.0 + kGammaGridPower * shape_m1;
        for (std::size_t j = 0; j < nodes; ++j) {
            const double u = rule.grid.nodes[j];
            const double u2 = u * u;
            const double t = hi * u2 * u2;
            const double z = (x - t) * inv_s;
            terms[j] = rule.log_weights[j] + base + log_u_power * rule.log_nodes[j] - t * inv_scale - 0.5 * z * z;
        }
    } else {
        const double width = hi - lo;
        const double base = std::log(width) - log_norm;
        for (std::size_t j = 0; j < nodes; ++j) {
            const double t = lo + width * rule.grid.nodes[j];
            const double z = (x - t) * inv_s;
            terms[j] = rule.log_weights[j] + base + shape_m1 * std::log(t) - t * inv_scale - 0.5 * z * z;
        }
    }
    return detail::log_sum_exp(terms.data(), nodes) - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Per-record log densities; throws DomainError for invalid params and
// NumericalError naming the record on underflow.
inline std::vector<double> record_log_likelihoods(const ModelParams& params, const ModelSpec& spec,
                                                  const Dataset& data, unsigned threads = 0) {
    if (params.policy.cutoffs() != spec.cutoffs) throw ConfigError("log_likelihood: policy cutoffs differ from spec");
    std::vector<double> out(data.size());
    if (data.empty()) return out;
    const double normalizer = selection_normalizer(params.latent, params.policy, spec);
    if (!(normalizer > 0.0) || !std::isfinite(normalizer)) {
        throw NumericalError("log_likelihood: selection normalizer is not positive");
    }
    const double log_normalizer = std::log(normalizer);
    const double upper = gamma_quantile(params.latent.theta, 1.0 - 1e-12);
    const auto& g = params.latent;
    detail::parallel_blocks(data.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& r = data.records[i];
            const double w = params.policy.weight(r.x / r.sigma);
            const double conv = log_convolution_density(g.theta, r.x, r.sigma, spec.numerator_nodes, upper);
            if (!std::isfinite(conv)) {
                throw NumericalError("log_likelihood: quadrature underflow for record '" + r.study_id + "'");
            }
            out[i] = std::log(w) + conv + gamma_log_pdf(g.sigma, r.sigma) - log_normalizer;
        }
    });
    return out;
}

inline double log_likelihood(const ModelParams& params, const ModelSpec& spec, const Dataset& data,
                             unsigned threads = 0) {
    const auto per_record = record_log_likelihoods(params, spec, data, threads);
    double total = 0.0;
    for (double v : per_record) total += v;
    return total;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

inline Dataset generate_synthetic_dataset(const LatentModel& latent, const StepPolicy& policy,
                                          std::size_t n_published, std::uint64_t seed) {
    if (n_published < 1) throw ConfigError("generate_synthetic_dataset: n_published must be >= 1");
    ModelSpec grid_spec;
    grid_spec.cutoffs = policy.cutoffs();
    const double acceptance = selection_normalizer(latent, policy, grid_spec) / policy.max_weight();
    if (!(acceptance >= 1e-6)) {
        throw NumericalError("generate_synthetic_dataset: publication probability " + std::to_string(acceptance) +
                             " is below 1e-6");
    }
    const double max_weight = policy.max_weight();
    RandomStream stream(seed, 0);
    const GammaLatentSampler sampler{latent};
    Dataset data;
    data.records.reserve(n_published);
    while (data.size() < n_published) {
        const StudyDraw d = draw_study(sampler, stream);
        if (is_published(policy, max_weight, d.x / d.sigma, d.u_publish)) {
            data.records.push_back({"s" + std::to_string(data.size() + 1), d.x, d.sigma});
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Robust standard errors
// ---------------------------------------------------------------------------

inline constexpr double kDerivativeStep = 1e-4;

// Sandwich H^-1 B H^-1 in log space, mapped back by the delta method.
inline std::map<std::string, double> robust_se(const ModelParams& params, const ModelSpec& spec, const Dataset& data,
                                               unsigned threads = 0) {
    const auto x0 = detail::pack(params, spec);
    const std::size_t p = x0.size();
    const std::size_t n = data.size();
    const double h = kDerivativeStep;
    auto total = [&](const std::vector<double>& v) {
        return log_likelihood(detail::unpack(v, spec), spec, data, threads);
    };

    Eigen::MatrixXd scores(n, p);
    std::vector<double> f_plus(p), f_minus(p);
    for (std::size_t k = 0; k < p; ++k) {
        auto xp = x0, xm = x0;
        xp[k] += h;
        xm[k] -= h;
        const auto lp = record_log_likelihoods(detail::unpack(xp, spec), spec, data, threads);
        const auto lm = record_log_likelihoods(detail::unpack(xm, spec), spec, data, threads);
        double sp = 0.0, sm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (lp[i] - lm[i]) / (2.0 * h);
            sp += lp[i];
            sm += lm[i];
        }
        f_plus[k] = sp;
        f_minus[k] = sm;
    }

    const double f0 = total(x0);
    Eigen::MatrixXd hessian(p, p);
    for (std::size_t k = 0; k < p; ++k) {
        hessian(k, k) = (f_plus[k] - 2.0 * f0 + f_minus[k]) / (h * h);
        for (std::size_t l = k + 1; l < p; ++l) {
            auto pp = x0, pm = x0, mp = x0, mm = x0;
            pp[k] += h, pp[l] += h;
            pm[k] += h, pm[l] -= h;
            mp[k] -= h, mp[l] += h;
            mm[k] -= h, mm[l] -= h;
            const double v = (total(pp) - total(pm) - total(mp) + total(mm)) / (4.0 * h * h);
            hessian(k, l) = v;
            hessian(l, k) = v;
        }
    }

    const auto names = parameter_names(spec);
    const Eigen::MatrixXd information = -hessian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
    const auto& ev = eig.eigenvalues();
    const double largest = std::max(std::abs(ev.maxCoeff()), std::abs(ev.minCoeff()));
    // Curvature below the rounding noise of the second differences is not identified.
    const double noise = 10.0 * std::numeric_limits<double>::epsilon() * std::abs(f0) / (h * h);
    if (!(ev.minCoeff() > std::max(1e-10 * largest, noise))) {
        Eigen::Index flat = 0;
        eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&flat);
        throw NumericalError("robust_se: singular Hessian; flat direction along " + names[static_cast<std::size_t>(flat)]);
    }
    const Eigen::MatrixXd bread = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::MatrixXd meat = scores.transpose() * scores;
    const Eigen::MatrixXd cov = bread * meat * bread;

    const auto natural = detail::unpack(x0, spec);
    std::vector<double> values{natural.latent.theta.shape, natural.latent.theta.scale, natural.latent.sigma.shape,
                               natural.latent.sigma.scale};
    for (std::size_t b : detail::free_bands(spec)) values.push_back(natural.policy.weights()[b]);
    std::map<std::string, double> se;
    for (std::size_t k = 0; k < p; ++k) {
        const double var = cov(k, k);
        if (!(var >= 0.0) || !std::isfinite(var)) throw NumericalError("robust_se: non-finite variance for " + names[k]);
        se[names[k]] = values[k] * std::sqrt(var);
    }
    return se;
}

// Gradient of the mean per-record log-likelihood in log space.
inline std::vector<double> mean_score(const ModelParams& params, const ModelSpec& spec, const Dataset& data,
                                      unsigned threads = 0) {
    const auto x0 = detail::pack(params, spec);
    std::vector<double> g(x0.size());
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(1, data.size()));
    for (std::size_t k = 0; k < x0.size(); ++k) {
        auto xp = x0, xm = x0;
        xp[k] += kDerivativeStep;
        xm[k] -= kDerivativeStep;
        g[k] = scale *
               (log_likelihood(detail::unpack(xp, spec), spec, data, threads) -
                log_likelihood(detail::unpack(xm, spec), spec, data, threads)) /
               (2.0 * kDerivativeStep);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct FitOptions {
    std::size_t starts = 8;
    std::uint64_t seed = 0;
    double diameter_tol = 1e-6;
    std::size_t max_evals_per_start = 20'000;
    bool compute_se = true;
    unsigned threads = 0;
    // Replaces the moment-based first start when set.
    std::optional<ModelParams> initial;
};

namespace detail {

inline GammaParams moment_gamma(double mean, double var) {
    if (!(mean > 0.0) || !(var > 0.0)) throw DataError("fit_mle: degenerate data (zero moment)");
    return {mean * mean / var, var / mean};
}

inline ModelParams moment_start(const Dataset& data, const ModelSpec& spec) {
    double m_abs = 0.0, m_abs2 = 0.0, m_s = 0.0, m_s2 = 0.0;
    for (const auto& r : data.records) {
        m_abs += std::abs(r.x);
        m_abs2 += r.x * r.x;
        m_s += r.sigma;
        m_s2 += r.sigma * r.sigma;
    }
    const double n = static_cast<double>(data.size());
    m_abs /= n, m_abs2 /= n, m_s /= n, m_s2 /= n;
    const GammaParams theta = moment_gamma(m_abs, m_abs2 - m_abs * m_abs);
    const GammaParams sigma = moment_gamma(m_s, m_s2 - m_s * m_s);
    const LatentModel latent{{theta.shape, 0.7 * theta.scale}, sigma};

    // Free weights from observed band shares against the shares expected
    // without selection under the moment-based latent model.
    const std::size_t bands = spec.band_count();
    std::vector<double> observed(bands, 0.0);
    StepPolicy probe(spec.cutoffs, std::vector<double>(bands, 1.0));
    for (const auto& r : data.records) observed[probe.band_index(r.x / r.sigma)] += 1.0 / n;
    std::vector<double> expected(bands, 0.0);
    for (std::size_t b = 0; b < bands; ++b) {
        std::vector<double> indicator(bands, 0.0);
        indicator[b] = 1.0;
        if (b + 1 < bands) indicator.back() = 1e-300;  // top weight must stay positive
        ModelSpec grid = spec;
        grid.theta_nodes = grid.sigma_nodes = 48;
        expected[b] = selection_normalizer(latent, StepPolicy(spec.cutoffs, indicator), grid);
    }
    std::vector<double> w(bands, 1.0);
    const double top_ratio = observed.back() / std::max(expected.back(), 1e-300);
    for (std::size_t b = 0; b + 1 < bands; ++b) {
        if (spec.fixed_weights[b]) {
            w[b] = *spec.fixed_weights[b];
            continue;
        }
        const double ratio = (observed[b] / std::max(expected[b], 1e-300)) / std::max(top_ratio, 1e-300);
        w[b] = std::clamp(ratio, 1e-3, 1e3);
    }
    return {latent, StepPolicy(spec.cutoffs, w)};
}

}  // namespace detail

inline MleResult fit_mle(const Dataset& data, const ModelSpec& spec, const FitOptions& options = {}) {
    validate(spec);
    validate(data);
    if (data.size() < 10) throw DataError("fit_mle: need at least 10 records");
    bool varies_x = false, varies_s = false;
    for (const auto& r : data.records) {
        varies_x = varies_x || r.x != data.records[0].x;
        varies_s = varies_s || r.sigma != data.records[0].sigma;
    }
    if (!varies_x || !varies_s) throw DataError("fit_mle: degenerate data (all x or all sigma identical)");

    const double n = static_cast<double>(data.size());
    auto objective = [&](const std::vector<double>& v) {
        for (double c : v) {
            if (!std::isfinite(c) || std::abs(c) > 30.0) return std::numeric_limits<double>::infinity();
        }
        try {
            return -log_likelihood(detail::unpack(v, spec), spec, data, options.threads) / n;
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const ModelParams base = options.initial ? *options.initial : detail::moment_start(data, spec);
    const auto base_vec = detail::pack(base, spec);
    RandomStream jitter(options.seed, 0x5eed);
    NelderMeadOptions nm;
    nm.diameter_tol = options.diameter_tol;
    nm.max_evals = options.max_evals_per_start;

    MleResult result;
    NelderMeadResult best;
    for (std::size_t s = 0; s < std::max<std::size_t>(1, options.starts); ++s) {
        auto start = base_vec;
        if (s > 0) {
            for (double& c : start) c += std::log(0.5 + jitter.uniform());
        }
        nm.initial_step = 0.1;
        auto run = nelder_mead(objective, start, nm);
        // Restart from the optimum once to guard against a collapsed simplex.
        if (std::isfinite(run.value)) {
            nm.initial_step = 0.02;
            auto again = nelder_mead(objective, run.x, nm);
            again.n_evals += run.n_evals;
            if (again.value <= run.value) run = again;
            else run.n_evals = again.n_evals;
        }
        result.n_evals += run.n_evals;
        result.start_logliks.push_back(-run.value * n);
        if (s == 0 || run.value < best.value) best = run;
    }
    result.n_starts = std::max<std::size_t>(1, options.starts);
    if (!std::isfinite(best.value)) {
        result.converged = false;
        result.se_diagnostic = "all starts diverged";
        result.params = base;
        return result;
    }
    result.params = detail::unpack(best.x, spec);
    result.loglik = -best.value * n;
    result.converged = best.converged;
    if (options.compute_se) {
        try {
            result.robust_se = robust_se(result.params, spec, data, options.threads);
        } catch (const NumericalError& e) {
            result.se_diagnostic = e.what();
        }
    }
    return result;
}

inline void to_json(nlohmann::json& j, const MleResult& r) {
    j = nlohmann::json{
        {"params",
         {{"theta", {{"shape", r.params.latent.theta.shape}, {"scale", r.params.latent.theta.scale}}},
          {"sigma", {{"shape", r.params.latent.sigma.shape}, {"scale", r.params.latent.sigma.scale}}},
          {"cutoffs", r.params.policy.cutoffs()},
          {"weights", r.params.policy.weights()}}},
        {"loglik", r.loglik},
        {"robust_se", r.robust_se},
        {"converged", r.converged},
        {"n_evals", r.n_evals}};
    if (!r.se_diagnostic.empty()) j["diagnostic"] = r.se_diagnostic;
}

}  // namespace metarep
