#pragma once

// Monte Carlo simulation of latent studies, selective publication and
// replication, with the aggregate replication metrics.
//
// Per latent study the draw order is fixed: theta*, sigma*, the estimation
// noise, the publication uniform, the ratio-pool uniform and the replication
// noise. No draw depends on the policy or power rule, so two runs with the same
// seed share all latent draws (common random numbers) and differ only in which
// studies pass the publication step.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "metarep/error.hpp"
#include "metarep/random.hpp"
#include "metarep/replication_model.hpp"
#include "metarep/selection_model.hpp"
#include "metarep/stats_core.hpp"

namespace metarep {

// |Theta*| ~ Gamma(theta), Sigma* ~ Gamma(sigma), independent.
struct LatentModel {
    GammaParams theta;
    GammaParams sigma;

    friend bool operator==(const LatentModel&, const LatentModel&) = default;
};

struct Preset {
    std::string name;
    LatentModel latent;
    StepPolicy policy;
};

// Maximum likelihood estimates for the economics and psychology replication
// samples (Fisher-z units).
inline Preset econ_table1() {
    return {"econ-table1", {{1.426, 0.148}, {2.735, 0.103}}, StepPolicy{{1.64, 1.96}, {0.0, 0.038, 1.0}}};
}

inline Preset psych_table1() {
    return {"psych-table1", {{0.906, 0.156}, {4.762, 0.044}}, StepPolicy{{1.64, 1.96}, {0.012, 0.299, 1.0}}};
}

inline Preset find_preset(const std::string& name) {
    if (name == "econ-table1" || name == "econ") return econ_table1();
    if (name == "psych-table1" || name == "psych") return psych_table1();
    throw ConfigError("unknown preset '" + name + "' (expected econ-table1 or psych-table1)");
}

struct StudyRecord {
    double theta = 0.0;
    double sigma = 1.0;
    double x = 0.0;
    bool published = false;
    bool selected = false;
};

struct ReplicationRecord {
    StudyRecord origin;
    double sigma_r = 1.0;
    double x_r = 0.0;
};

inline constexpr std::uint64_t kMinDraws = 10'000;

struct SimulationConfig {
    LatentModel latent;
    StepPolicy policy;
    PowerRule power_rule = CommonMean{0.92};
    std::uint64_t n_draws = 10'000'000;
    std::uint64_t seed = 0;
    // Originals with |x / sigma| >= inclusion_t enter the replication rate.
    // Lowering it admits near-significant results for robustness runs.
    double inclusion_t = kCriticalT;
    // 0 = use all hardware threads (capped by METAREP_THREADS).
    unsigned threads = 0;
};

inline void validate(const SimulationConfig& config) {
    if (config.n_draws < kMinDraws) throw ConfigError("SimulationConfig: n_draws must be at least 10^4");
    if (!(config.inclusion_t > 0.0)) throw ConfigError("SimulationConfig: inclusion_t must be positive");
    validate(config.power_rule);
}

struct SimulationMetrics {
    double replication_rate = 0.0;    // same-sign significant replications among significant originals
    double generalized_rr = 0.0;      // success share over all published originals
    double rmr = 0.0;                 // mean tanh(x_r) / mean tanh(x) among significant originals
    double mean_bias = 0.0;           // E(X* - Theta* | D = 1)
    double coverage = 0.0;            // P(|X* - Theta*| < 1.96 Sigma* | D = 1)
    double share_significant = 0.0;   // P(S = 1 | D = 1)
    std::uint64_t n_included = 0;     // significant published originals
    double mc_se = 0.0;               // binomial standard error of replication_rate

    double rr_insignificant = 0.0;    // P(replication insignificant | S = 0), NaN if no S = 0 studies
    double mean_true_effect = 0.0;    // E(Theta* | D = 1)
    double mean_x = 0.0;              // E(X | D = 1)
    double mean_x_significant = 0.0;  // E(X | D = 1, S = 1)
    double mean_xr_significant = 0.0; // E(X_r | D = 1, S = 1)
    double mean_xr_significant_se = 0.0;
    std::uint64_t n_published = 0;
    std::uint64_t n_draws = 0;
};

// Streaming sums behind SimulationMetrics. Merging is plain addition, so a
// fixed merge order gives bitwise-reproducible totals.
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(double inclusion_t = kCriticalT) : inclusion_t_(inclusion_t) {}

    void count_draw(std::uint64_t n = 1) { n_draws_ += n; }

    // Adds a published, selected study with its replication.
    void add(double theta, double sigma, double x, double sigma_r, double x_r) {
        ++n_published_;
        sum_theta_ += theta;
        sum_x_ += x;
        sum_bias_ += x - theta;
        if (std::abs(x - theta) < kCriticalT * sigma) ++n_covered_;
        const bool replicated_sig = std::abs(x_r) >= kCriticalT * sigma_r;
        if (std::abs(x) >= inclusion_t_ * sigma) {
            ++n_sig_;
            if (replicated_sig && sign_of(x_r) == sign_of(x)) ++n_sig_success_;
            sum_x_sig_ += x;
            sum_xr_sig_ += x_r;
            sum_xr2_sig_ += x_r * x_r;
            sum_tanh_x_sig_ += std::tanh(x);
            sum_tanh_xr_sig_ += std::tanh(x_r);
        } else if (!replicated_sig) {
            ++n_insig_success_;
        }
    }

    void add(const ReplicationRecord& r) {
        add(r.origin.theta, r.origin.sigma, r.origin.x, r.sigma_r, r.x_r);
    }

    void merge(const MetricsAccumulator& o) {
        n_draws_ += o.n_draws_;
        n_published_ += o.n_published_;
        n_covered_ += o.n_covered_;
        n_sig_ += o.n_sig_;
        n_sig_success_ += o.n_sig_success_;
        n_insig_success_ += o.n_insig_success_;
        sum_theta_ += o.sum_theta_;
        sum_x_ += o.sum_x_;
        sum_bias_ += o.sum_bias_;
        sum_x_sig_ += o.sum_x_sig_;
        sum_xr_sig_ += o.sum_xr_sig_;
        sum_xr2_sig_ += o.sum_xr2_sig_;
        sum_tanh_x_sig_ += o.sum_tanh_x_sig_;
        sum_tanh_xr_sig_ += o.sum_tanh_xr_sig_;
    }

    std::uint64_t n_published() const { return n_published_; }
    std::uint64_t n_significant() const { return n_sig_; }

    double replication_rate() const {
        if (n_sig_ == 0) throw EmptySetError("no significant published originals");
        return static_cast<double>(n_sig_success_) / static_cast<double>(n_sig_);
    }

    double regression_to_mean_ratio() const {
        if (n_sig_ == 0) throw EmptySetError("no significant published originals");
        if (sum_tanh_x_sig_ == 0.0) throw NumericalError("regression_to_mean_ratio: zero mean original effect");
        return sum_tanh_xr_sig_ / sum_tanh_x_sig_;
    }

    double generalized_replication_rate() const {
        if (n_published_ == 0) throw EmptySetError("no published originals");
        return static_cast<double>(n_sig_success_ + n_insig_success_) / static_cast<double>(n_published_);
    }

    double mean_bias() const {
        if (n_published_ == 0) throw EmptySetError("no published originals");
        return sum_bias_ / static_cast<double>(n_published_);
    }

    double coverage() const {
        if (n_published_ == 0) throw EmptySetError("no published originals");
        return static_cast<double>(n_covered_) / static_cast<double>(n_published_);
    }

    SimulationMetrics finish() const {
        SimulationMetrics m;
        m.replication_rate = replication_rate();
        m.generalized_rr = generalized_replication_rate();
        m.rmr = regression_to_mean_ratio();
        m.mean_bias = mean_bias();
        m.coverage = coverage();
        const double n_pub = static_cast<double>(n_published_);
        const double n_sig = static_cast<double>(n_sig_);
        m.share_significant = n_sig / n_pub;
        m.n_included = n_sig_;
        m.mc_se = std::sqrt(m.replication_rate * (1.0 - m.replication_rate) / n_sig);
        const std::uint64_t n_insig = n_published_ - n_sig_;
        m.rr_insignificant = n_insig > 0 ? static_cast<double>(n_insig_success_) / static_cast<double>(n_insig)
                                         : std::numeric_limits<double>::quiet_NaN();
        m.mean_true_effect = sum_theta_ / n_pub;
        m.mean_x = sum_x_ / n_pub;
        m.mean_x_significant = sum_x_sig_ / n_sig;
        m.mean_xr_significant = sum_xr_sig_ / n_sig;
        const double var_xr = std::max(0.0, sum_xr2_sig_ / n_sig - m.mean_xr_significant * m.mean_xr_significant);
        m.mean_xr_significant_se = std::sqrt(var_xr / n_sig);
        m.n_published = n_published_;
        m.n_draws = n_draws_;
        return m;
    }

private:
    double inclusion_t_;
    std::uint64_t n_draws_ = 0;
    std::uint64_t n_published_ = 0;
    std::uint64_t n_covered_ = 0;
    std::uint64_t n_sig_ = 0;
    std::uint64_t n_sig_success_ = 0;
    std::uint64_t n_insig_success_ = 0;
    double sum_theta_ = 0.0;
    double sum_x_ = 0.0;
    double sum_bias_ = 0.0;
    double sum_x_sig_ = 0.0;
    double sum_xr_sig_ = 0.0;
    double sum_xr2_sig_ = 0.0;
    double sum_tanh_x_sig_ = 0.0;
    double sum_tanh_xr_sig_ = 0.0;
};

// ---------------------------------------------------------------------------
// Record-level statistics
// ---------------------------------------------------------------------------

// Records that are not published and selected are ignored.
inline MetricsAccumulator accumulate(std::span<const ReplicationRecord> records, double inclusion_t = kCriticalT) {
    MetricsAccumulator acc(inclusion_t);
    for (const auto& r : records) {
        if (r.origin.published && r.origin.selected) acc.add(r);
    }
    return acc;
}

inline double simulated_replication_rate(std::span<const ReplicationRecord> records,
                                         double inclusion_t = kCriticalT) {
    return accumulate(records, inclusion_t).replication_rate();
}

inline double regression_to_mean_ratio(std::span<const ReplicationRecord> records, double inclusion_t = kCriticalT) {
    return accumulate(records, inclusion_t).regression_to_mean_ratio();
}

inline double generalized_replication_rate(std::span<const ReplicationRecord> records) {
    return accumulate(records).generalized_replication_rate();
}

inline double mean_bias(std::span<const StudyRecord> records) {
    double sum = 0.0;
    std::uint64_t n = 0;
    for (const auto& r : records) {
        if (!r.published) continue;
        sum += r.x - r.theta;
        ++n;
    }
    if (n == 0) throw EmptySetError("no published studies");
    return sum / static_cast<double>(n);
}

inline double coverage(std::span<const StudyRecord> records) {
    std::uint64_t covered = 0, n = 0;
    for (const auto& r : records) {
        if (!r.published) continue;
        if (std::abs(r.x - r.theta) < kCriticalT * r.sigma) ++covered;
        ++n;
    }
    if (n == 0) throw EmptySetError("no published studies");
    return static_cast<double>(covered) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kChunkSize = std::uint64_t{1} << 16;

// Worker count: the request (0 = hardware concurrency), capped by METAREP_THREADS.
inline unsigned resolve_thread_count(unsigned requested) {
    unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("METAREP_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

// Runs fn(chunk_index, chunk_draws) for every chunk, possibly in parallel, and
// returns the results indexed by chunk.
template <class Result, class ChunkFn>
std::vector<Result> run_chunks(std::uint64_t n_draws, unsigned threads, ChunkFn&& fn) {
    const std::uint64_t n_chunks = (n_draws + kChunkSize - 1) / kChunkSize;
    std::vector<Result> results(n_chunks);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                results[c] = fn(c, std::min(kChunkSize, n_draws - c * kChunkSize));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_chunks);
                return;
            }
        }
    };
    const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(resolve_thread_count(threads), n_chunks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

struct GammaLatentSampler {
    LatentModel model;
    std::pair<double, double> operator()(RandomStream& s) const {
        const double theta = gamma_sample(model.theta, s);
        const double sigma = gamma_sample(model.sigma, s);
        return {theta, sigma};
    }
};

struct PointLatentSampler {
    double theta;
    double sigma;
    std::pair<double, double> operator()(RandomStream&) const { return {theta, sigma}; }
};

struct StudyDraw {
    double theta;
    double sigma;
    double x;
    double u_publish;
    double u_pool;
    double z_replication;
};

template <class LatentSampler>
StudyDraw draw_study(const LatentSampler& latent, RandomStream& s) {
    StudyDraw d{};
    std::tie(d.theta, d.sigma) = latent(s);
    d.x = d.theta + d.sigma * s.normal();
    // x == 0 has probability zero; keep the sign convention well defined.
    if (d.x == 0.0) d.x = std::numeric_limits<double>::denorm_min();
    d.u_publish = s.uniform();
    d.u_pool = s.uniform();
    d.z_replication = s.normal();
    return d;
}

inline bool is_published(const StepPolicy& policy, double max_weight, double t, double u) {
    return u < policy.weight(t) / max_weight;
}

// One pass over the latent draws, evaluating every policy on the same draws.
template <class LatentSampler>
std::vector<SimulationMetrics> simulate_policies(const LatentSampler& latent, std::span<const StepPolicy> policies,
                                                 const PowerRule& rule, std::uint64_t n_draws, std::uint64_t seed,
                                                 double inclusion_t = kCriticalT, unsigned threads = 0) {
    validate(rule);
    if (policies.empty()) return {};
    std::vector<double> max_weights;
    for (const auto& p : policies) max_weights.push_back(p.max_weight());

    auto chunk_fn = [&](std::uint64_t chunk, std::uint64_t count) {
        RandomStream stream(seed, chunk);
        std::vector<MetricsAccumulator> acc(policies.size(), MetricsAccumulator(inclusion_t));
        for (std::uint64_t i = 0; i < count; ++i) {
            const StudyDraw d = draw_study(latent, stream);
            const double t = d.x / d.sigma;
            const double sigma_r = replication_sigma(rule, d.x, d.sigma, d.u_pool).sigma_r();
            const double x_r = d.theta + sigma_r * d.z_replication;
            for (std::size_t p = 0; p < policies.size(); ++p) {
                if (is_published(policies[p], max_weights[p], t, d.u_publish)) {
                    acc[p].add(d.theta, d.sigma, d.x, sigma_r, x_r);
                }
            }
        }
        for (auto& a : acc) a.count_draw(count);
        return acc;
    };
    const auto chunks = run_chunks<std::vector<MetricsAccumulator>>(n_draws, threads, chunk_fn);

    std::vector<MetricsAccumulator> total(policies.size(), MetricsAccumulator(inclusion_t));
    for (const auto& chunk : chunks) {
        for (std::size_t p = 0; p < policies.size(); ++p) total[p].merge(chunk[p]);
    }
    std::vector<SimulationMetrics> out;
    out.reserve(policies.size());
    for (const auto& t : total) out.push_back(t.finish());
    return out;
}

inline SimulationMetrics simulate(const SimulationConfig& config) {
    validate(config);
    const StepPolicy policies[] = {config.policy};
    return simulate_policies(GammaLatentSampler{config.latent}, policies, config.power_rule, config.n_draws,
                             config.seed, config.inclusion_t, config.threads)
        .front();
}

// Every latent draw of `config` as a record (published or not). Memory grows
// linearly with n_draws; intended for inspection and tests.
inline std::vector<ReplicationRecord> simulate_records(const SimulationConfig& config) {
    validate(config);
    const double max_weight = config.policy.max_weight();
    auto chunk_fn = [&](std::uint64_t chunk, std::uint64_t count) {
        RandomStream stream(config.seed, chunk);
        std::vector<ReplicationRecord> out;
        out.reserve(count);
        const GammaLatentSampler latent{config.latent};
        for (std::uint64_t i = 0; i < count; ++i) {
            const StudyDraw d = draw_study(latent, stream);
            const double sigma_r = replication_sigma(config.power_rule, d.x, d.sigma, d.u_pool).sigma_r();
            ReplicationRecord r;
            r.origin.theta = d.theta;
            r.origin.sigma = d.sigma;
            r.origin.x = d.x;
            r.origin.published = is_published(config.policy, max_weight, d.x / d.sigma, d.u_publish);
            r.origin.selected = r.origin.published;
            r.sigma_r = sigma_r;
            r.x_r = d.theta + sigma_r * d.z_replication;
            out.push_back(r);
        }
        return out;
    };
    const auto chunks = run_chunks<std::vector<ReplicationRecord>>(config.n_draws, config.threads, chunk_fn);
    std::vector<ReplicationRecord> records;
    records.reserve(config.n_draws);
    for (const auto& c : chunks) records.insert(records.end(), c.begin(), c.end());
    return records;
}

// ---------------------------------------------------------------------------
// Counterfactual sweeps
// ---------------------------------------------------------------------------

struct PolicySweepRow {
    double beta_p;
    SimulationMetrics metrics;
};

// Insignificant results (|t| < 1.96) published with relative probability
// beta_p; all grid points share the same latent draws.
inline std::vector<PolicySweepRow> policy_sweep(const LatentModel& latent, std::span<const double> beta_grid,
                                                const PowerRule& rule, std::uint64_t n_draws = 10'000'000,
                                                std::uint64_t seed = 0, unsigned threads = 0) {
    if (n_draws < kMinDraws) throw ConfigError("policy_sweep: n_draws must be at least 10^4");
    std::vector<StepPolicy> policies;
    for (double b : beta_grid) {
        if (!(b >= 0.0 && b <= 1.0)) throw DomainError("policy_sweep: beta_p must lie in [0, 1]");
        policies.emplace_back(std::vector<double>{1.64, 1.96}, std::vector<double>{b, b, 1.0});
    }
    const auto metrics = simulate_policies(GammaLatentSampler{latent}, policies, rule, n_draws, seed, kCriticalT,
                                           threads);
    std::vector<PolicySweepRow> rows;
    for (std::size_t i = 0; i < metrics.size(); ++i) rows.push_back({beta_grid[i], metrics[i]});
    return rows;
}

struct TierSweepRow {
    double beta_p2;
    double replication_rate;
    double mean_true_effect;
    double mean_bias;
};

// Cutoffs [1.64, 1.96, kappa]: moderately significant results (1.96 <= |t| < kappa)
// carry weight beta_p2 relative to highly significant ones. The two
// insignificant bands keep the weights of `insignificant_policy`.
inline std::vector<TierSweepRow> moderate_significance_sweep(const LatentModel& latent, double kappa,
                                                             std::span<const double> beta_p2_grid,
                                                             double intended_power,
                                                             const StepPolicy& insignificant_policy,
                                                             std::uint64_t n_draws = 10'000'000,
                                                             std::uint64_t seed = 0, unsigned threads = 0) {
    if (!(kappa > kCriticalT)) throw DomainError("moderate_significance_sweep: kappa must exceed 1.96");
    if (n_draws < kMinDraws) throw ConfigError("moderate_significance_sweep: n_draws must be at least 10^4");
    const double w_low = insignificant_policy.weight(0.0);
    const double w_mid = insignificant_policy.weight(1.64);
    std::vector<StepPolicy> policies;
    for (double b : beta_p2_grid) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("moderate_significance_sweep: beta_p2 must be >= 0");
        policies.emplace_back(std::vector<double>{1.64, 1.96, kappa}, std::vector<double>{w_low, w_mid, b, 1.0});
    }
    const auto metrics = simulate_policies(GammaLatentSampler{latent}, policies, CommonMean{intended_power},
                                           n_draws, seed, kCriticalT, threads);
    std::vector<TierSweepRow> rows;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        rows.push_back({beta_p2_grid[i], metrics[i].replication_rate, metrics[i].mean_true_effect,
                        metrics[i].mean_bias});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Single-effect worked example: theta = 2.5, sigma = 1, 90% common power rule
// ---------------------------------------------------------------------------

struct ExampleRow {
    double mean_x;               // E(X)
    double bias;                 // E(X) - theta
    double mean_x_significant;   // E(X | |X| >= 1.96)
    double mean_xr_significant;  // E(X_r | |X| >= 1.96)
    double replication_rate;
};

inline constexpr double kExampleTheta = 2.5;
inline constexpr double kExampleSigma = 1.0;
inline constexpr double kExamplePower = 0.90;

inline ExampleRow simple_example(const Regime& regime, std::uint64_t n_draws = 1'000'000, std::uint64_t seed = 0,
                                 unsigned threads = 0) {
    const StepPolicy policies[] = {regime_policy(regime)};
    const auto m = simulate_policies(PointLatentSampler{kExampleTheta, kExampleSigma}, policies,
                                     CommonMean{kExamplePower}, n_draws, seed, kCriticalT, threads)
                       .front();
    return {m.mean_x, m.mean_bias, m.mean_x_significant, m.mean_xr_significant, m.replication_rate};
}

}  // namespace metarep
