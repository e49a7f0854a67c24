#pragma once

// Command-line front end. run_cli() parses argv, runs one subcommand and
// returns the process exit code:
//   0 success, 1 usage, 2 data or I/O, 3 numerical or convergence,
//   4 failed verification.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metarep/error.hpp"
#include "metarep/estimator.hpp"
#include "metarep/io.hpp"
#include "metarep/replication_model.hpp"
#include "metarep/selection_model.hpp"
#include "metarep/simulator.hpp"
#include "metarep/verify.hpp"

namespace metarep {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3, kExitVerify = 4 };

namespace cli {

// "mean:<p>", a bare probability, "realized:<path>" or "original".
inline PowerRule parse_power(const std::string& text) {
    auto probability = [&](const std::string& s) {
        double p = 0.0;
        if (!detail::parse_double(s, p)) throw ConfigError("--power: '" + text + "' is not a probability");
        const PowerRule rule = CommonMean{p};
        validate(rule);
        return rule;
    };
    if (text == "original") return OriginalPower{};
    if (text.rfind("mean:", 0) == 0) return probability(text.substr(5));
    if (text.rfind("realized:", 0) == 0) return CommonRealized{load_power_ratios(text.substr(9))};
    return probability(text);
}

// Named regime, inline JSON object or path to a JSON file.
inline StepPolicy parse_policy(const std::string& text) {
    if (text == "no-bias") return regime_policy(NoBias{});
    if (text == "significant-only") return regime_policy(SignificantOnly{});
    if (text == "insignificant-favored") return regime_policy(InsignificantFavored{});
    nlohmann::json j;
    if (!text.empty() && text.front() == '{') {
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("--policy: invalid JSON: ") + e.what());
        }
    } else {
        j = read_json_file(text);
    }
    try {
        return j.get<StepPolicy>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("--policy: ") + e.what());
    }
}

inline std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    for (const auto& cell : detail::split_csv_line(text)) {
        double v = 0.0;
        if (!detail::parse_double(cell, v)) throw ConfigError("grid value '" + cell + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty grid");
    return out;
}

// "<band>=<value>" where band is an index or insig / beta_p1 (0), marginal / beta_p2 (1).
inline std::pair<std::size_t, double> parse_fix(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("--fix expects <band>=<value>, got '" + text + "'");
    const std::string band = text.substr(0, eq);
    double value = 0.0;
    if (!detail::parse_double(text.substr(eq + 1), value) || value < 0.0) {
        throw ConfigError("--fix: value in '" + text + "' must be a number >= 0");
    }
    if (band == "insig" || band == "beta_p1") return {0, value};
    if (band == "marginal" || band == "beta_p2") return {1, value};
    double index = 0.0;
    if (detail::parse_double(band, index) && index >= 0 && index == std::floor(index)) {
        return {static_cast<std::size_t>(index), value};
    }
    throw ConfigError("--fix: unknown band '" + band + "'");
}

struct Common {
    std::string preset = "econ-table1";
    std::string model;
    std::string policy;
    std::string power = "mean:0.92";
    std::uint64_t n = 10'000'000;
    std::uint64_t seed = 0;
    std::string out;
    std::string format;
};

inline ModelParams resolve_model(const Common& c) {
    ModelParams m;
    if (!c.model.empty()) {
        m = model_from_json(read_json_file(c.model));
    } else {
        const Preset p = find_preset(c.preset);
        m = {p.latent, p.policy};
    }
    if (!c.policy.empty()) m.policy = parse_policy(c.policy);
    return m;
}

inline std::string metrics_csv(const std::vector<std::pair<std::string, SimulationMetrics>>& rows,
                               const std::string& key) {
    CsvTable t;
    if (!key.empty()) t.header.push_back(key);
    for (const char* h : {"replication_rate", "generalized_rr", "rmr", "mean_bias", "coverage", "share_significant",
                          "n_included", "mc_se"}) {
        t.header.push_back(h);
    }
    for (const auto& [label, m] : rows) {
        std::vector<std::string> r;
        if (!key.empty()) r.push_back(label);
        for (double v : {m.replication_rate, m.generalized_rr, m.rmr, m.mean_bias, m.coverage, m.share_significant}) {
            r.push_back(format_number(v));
        }
        r.push_back(std::to_string(m.n_included));
        r.push_back(format_number(m.mc_se));
        t.add_row(std::move(r));
    }
    return t.str();
}

inline std::string fit_csv(const MleResult& r, const ModelSpec& spec) {
    CsvTable t{{"parameter", "estimate", "robust_se"}, {}};
    const auto& p = r.params;
    auto se = [&](const std::string& name) {
        auto it = r.robust_se.find(name);
        return it == r.robust_se.end() ? std::string() : format_number(it->second);
    };
    t.add_row({"theta_shape", format_number(p.latent.theta.shape), se("theta_shape")});
    t.add_row({"theta_scale", format_number(p.latent.theta.scale), se("theta_scale")});
    t.add_row({"sigma_shape", format_number(p.latent.sigma.shape), se("sigma_shape")});
    t.add_row({"sigma_scale", format_number(p.latent.sigma.scale), se("sigma_scale")});
    for (std::size_t b = 0; b + 1 < spec.band_count(); ++b) {
        const std::string name = "weight_" + std::to_string(b);
        t.add_row({name, format_number(p.policy.weights()[b]), se(name)});
    }
    return t.str();
}

inline void require_format(const std::string& format, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (format == a) return;
    }
    throw ConfigError("--format '" + format + "' is not supported by this command");
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Replication-rate simulation and selection-model estimation (Fisher-z units)", "metarep"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    cli::Common c;
    std::string data_path, beta_grid, regime = "all";
    std::vector<std::string> fixes;
    std::size_t starts = 8, n_published = 1000;
    double kappa = 3.0, inclusion_t = kCriticalT;

    auto add_model = [&](CLI::App* s) {
        s->add_option("--preset", c.preset, "econ-table1 or psych-table1")->capture_default_str();
        s->add_option("--model", c.model, "JSON file with fitted parameters (output of estimate)");
        s->add_option("--policy", c.policy, "no-bias, significant-only, insignificant-favored, inline JSON or file");
    };
    // Defaults differ per command and are applied after parsing.
    std::map<const CLI::App*, std::pair<std::uint64_t, std::string>> defaults;
    std::optional<std::uint64_t> n_opt;
    std::optional<std::string> format_opt;
    auto add_run = [&](CLI::App* s, std::uint64_t default_n) {
        defaults[s].first = default_n;
        s->add_option("--n", n_opt, "latent draws (default " + std::to_string(default_n) + ")");
        s->add_option("--seed", c.seed, "random seed")->capture_default_str();
    };
    auto add_output = [&](CLI::App* s, const char* default_format) {
        defaults[s].second = default_format;
        s->add_option("--out", c.out, "output file (default stdout)");
        s->add_option("--format", format_opt, std::string("csv or json (default ") + default_format + ")");
    };
    auto add_power = [&](CLI::App* s) {
        s->add_option("--power", c.power, "mean:<p> | <p> | realized:<path> | original")->capture_default_str();
    };
    auto add_fit = [&](CLI::App* s) {
        s->add_option("--data", data_path, "CSV with columns study_id,x,sigma")->required();
        s->add_option("--fix", fixes, "fix a band weight: insig=0, marginal=0.1, <index>=<value>");
        s->add_option("--starts", starts, "optimizer starts")->capture_default_str();
    };

    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate replication metrics");
    add_model(simulate_cmd);
    add_power(simulate_cmd);
    simulate_cmd->add_option("--inclusion-t", inclusion_t, "minimum |t| for inclusion in the replication rate");
    add_run(simulate_cmd, 10'000'000);
    add_output(simulate_cmd, "json");

    auto* estimate_cmd = app.add_subcommand("estimate", "Fit the selection model to published estimates");
    add_fit(estimate_cmd);
    estimate_cmd->add_option("--seed", c.seed, "seed for start jitter")->capture_default_str();
    add_output(estimate_cmd, "json");

    auto* predict_cmd = app.add_subcommand("predict", "Fit, then simulate the replication rate of the fitted model");
    add_fit(predict_cmd);
    add_power(predict_cmd);
    add_run(predict_cmd, 10'000'000);
    add_output(predict_cmd, "json");

    auto* policy_cmd = app.add_subcommand("policy-sweep", "Metrics across insignificant-result publication weights");
    add_model(policy_cmd);
    add_power(policy_cmd);
    policy_cmd->add_option("--beta-grid", beta_grid, "comma-separated weights in [0, 1]");
    add_run(policy_cmd, 10'000'000);
    add_output(policy_cmd, "csv");

    auto* tier_cmd = app.add_subcommand("tier-sweep", "Replication rate across moderately significant weights");
    add_model(tier_cmd);
    add_power(tier_cmd);
    tier_cmd->add_option("--kappa", kappa, "upper cutoff of the moderately significant band")->capture_default_str();
    tier_cmd->add_option("--beta-grid", beta_grid, "comma-separated weights >= 0");
    add_run(tier_cmd, 10'000'000);
    add_output(tier_cmd, "csv");

    auto* example_cmd = app.add_subcommand("example-figure1", "Single-effect example, theta = 2.5, sigma = 1");
    example_cmd->add_option("--regime", regime, "1 (no bias), 2 (significant only), 3 (insignificant favored) or all")
        ->capture_default_str();
    add_run(example_cmd, 1'000'000);
    add_output(example_cmd, "csv");

    auto* generalized_cmd = app.add_subcommand("generalized-rr", "Generalized replication rate by selection and power rule");
    generalized_cmd->add_option("--preset", c.preset, "restrict to one preset (default: both)");
    add_run(generalized_cmd, 10'000'000);
    add_output(generalized_cmd, "csv");

    auto* synth_cmd = app.add_subcommand("synthesize", "Write a synthetic published dataset");
    add_model(synth_cmd);
    synth_cmd->add_option("--n-published", n_published, "records to write")->capture_default_str();
    synth_cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
    synth_cmd->add_option("--out", c.out, "output file (default stdout)");

    auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suite");
    add_run(verify_cmd, 2'000'000);
    verify_cmd->add_option("--out", c.out, "report file (default stdout)");


    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }
    const CLI::App* chosen = app.get_subcommands().front();
    if (auto it = defaults.find(chosen); it != defaults.end()) {
        c.n = n_opt.value_or(it->second.first);
        c.format = format_opt.value_or(it->second.second);
    }
    if (chosen == generalized_cmd && generalized_cmd->count("--preset") == 0) c.preset.clear();

    try {
        auto emit = [&](const std::string& text) { write_text(c.out, text, out); };
        auto build_spec = [&] {
            ModelSpec spec;
            for (const auto& f : fixes) {
                const auto [band, value] = cli::parse_fix(f);
                if (band >= spec.fixed_weights.size()) throw ConfigError("--fix: band " + std::to_string(band) + " out of range");
                spec.fixed_weights[band] = value;
            }
            return spec;
        };
        auto fit = [&](const Dataset& data, const ModelSpec& spec) {
            FitOptions o;
            o.starts = starts;
            o.seed = c.seed;
            return fit_mle(data, spec, o);
        };

        if (*simulate_cmd) {
            cli::require_format(c.format, {"json", "csv"});
            const ModelParams m = cli::resolve_model(c);
            SimulationConfig config{m.latent, m.policy, cli::parse_power(c.power), c.n, c.seed, inclusion_t};
            const SimulationMetrics metrics = simulate(config);
            emit(c.format == "json" ? json_text(metrics) : cli::metrics_csv({{"", metrics}}, ""));
            return kExitOk;
        }
        if (*estimate_cmd || *predict_cmd) {
            cli::require_format(c.format, *estimate_cmd ? std::initializer_list<const char*>{"json", "csv"}
                                                        : std::initializer_list<const char*>{"json"});
            const ModelSpec spec = build_spec();
            const Dataset data = load_dataset(data_path);
            const MleResult result = fit(data, spec);
            if (*estimate_cmd) {
                emit(c.format == "json" ? json_text(result) : cli::fit_csv(result, spec));
            } else {
                if (!result.converged) throw NumericalError("predict: fit did not converge");
                SimulationConfig config{result.params.latent, result.params.policy, cli::parse_power(c.power), c.n,
                                        c.seed};
                nlohmann::json j{{"fit", result}, {"prediction", simulate(config)}};
                emit(json_text(j));
            }
            if (!result.converged) {
                err << "error: optimizer did not converge\n";
                return kExitNumerical;
            }
            return kExitOk;
        }
        if (*policy_cmd) {
            cli::require_format(c.format, {"json", "csv"});
            const ModelParams m = cli::resolve_model(c);
            const auto grid = cli::parse_grid(beta_grid.empty() ? "0,0.25,0.5,0.75,1" : beta_grid);
            const auto rows = policy_sweep(m.latent, grid, cli::parse_power(c.power), c.n, c.seed);
            if (c.format == "json") {
                nlohmann::json j = nlohmann::json::array();
                for (const auto& r : rows) j.push_back({{"beta_p", r.beta_p}, {"metrics", r.metrics}});
                emit(json_text(j));
            } else {
                CsvTable t{{"beta_p", "replication_rate", "mean_bias", "coverage", "generalized_rr",
                            "share_significant", "rmr", "n_included", "mc_se"},
                           {}};
                for (const auto& r : rows) {
                    const auto& mm = r.metrics;
                    t.add_row({format_number(r.beta_p), format_number(mm.replication_rate),
                               format_number(mm.mean_bias), format_number(mm.coverage),
                               format_number(mm.generalized_rr), format_number(mm.share_significant),
                               format_number(mm.rmr), std::to_string(mm.n_included), format_number(mm.mc_se)});
                }
                emit(t.str());
            }
            return kExitOk;
        }
        if (*tier_cmd) {
            cli::require_format(c.format, {"json", "csv"});
            const ModelParams m = cli::resolve_model(c);
            const PowerRule rule = cli::parse_power(c.power);
            const auto* mean = std::get_if<CommonMean>(&rule);
            if (!mean) throw ConfigError("tier-sweep: --power must be a common intended power (mean:<p>)");
            const auto grid =
                cli::parse_grid(beta_grid.empty() ? "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1" : beta_grid);
            const auto rows = moderate_significance_sweep(m.latent, kappa, grid, mean->intended_power, m.policy, c.n,
                                                          c.seed);
            if (c.format == "json") {
                nlohmann::json j = nlohmann::json::array();
                for (const auto& r : rows) {
                    j.push_back({{"beta_p2", r.beta_p2},
                                 {"replication_rate", r.replication_rate},
                                 {"mean_true_effect", r.mean_true_effect},
                                 {"mean_bias", r.mean_bias}});
                }
                emit(json_text(j));
            } else {
                CsvTable t{{"beta_p2", "replication_rate", "mean_true_effect", "mean_bias"}, {}};
                for (const auto& r : rows) {
                    t.add_row({format_number(r.beta_p2), format_number(r.replication_rate),
                               format_number(r.mean_true_effect), format_number(r.mean_bias)});
                }
                emit(t.str());
            }
            return kExitOk;
        }
        if (*example_cmd) {
            cli::require_format(c.format, {"json", "csv"});
            std::vector<std::pair<std::string, Regime>> regimes;
            if (regime == "1" || regime == "all") regimes.push_back({"1", NoBias{}});
            if (regime == "2" || regime == "all") regimes.push_back({"2", SignificantOnly{}});
            if (regime == "3" || regime == "all") regimes.push_back({"3", InsignificantFavored{5.0}});
            if (regimes.empty()) throw ConfigError("--regime must be 1, 2, 3 or all");
            CsvTable t{{"regime", "mean_x", "bias", "mean_x_significant", "mean_xr_significant", "replication_rate"},
                       {}};
            nlohmann::json j = nlohmann::json::array();
            for (const auto& [label, r] : regimes) {
                const ExampleRow row = simple_example(r, c.n, c.seed);
                t.add_row({label, format_number(row.mean_x), format_number(row.bias),
                           format_number(row.mean_x_significant), format_number(row.mean_xr_significant),
                           format_number(row.replication_rate)});
                j.push_back({{"regime", std::stoi(label)},
                             {"mean_x", row.mean_x},
                             {"bias", row.bias},
                             {"mean_x_significant", row.mean_x_significant},
                             {"mean_xr_significant", row.mean_xr_significant},
                             {"replication_rate", row.replication_rate}});
            }
            emit(c.format == "json" ? json_text(j) : t.str());
            return kExitOk;
        }
        if (*generalized_cmd) {
            cli::require_format(c.format, {"json", "csv"});
            std::vector<Preset> presets;
            if (c.preset.empty()) {
                presets = {econ_table1(), psych_table1()};
            } else {
                presets = {find_preset(c.preset)};
            }
            CsvTable t{{"preset", "selection", "power_rule", "generalized_rr", "share_significant",
                        "replication_rate"},
                       {}};
            nlohmann::json j = nlohmann::json::array();
            for (const auto& p : presets) {
                const StepPolicy policies[] = {p.policy, regime_policy(NoBias{})};
                const std::pair<const char*, PowerRule> rules[] = {{"common", CommonMean{0.92}},
                                                                   {"original", OriginalPower{}}};
                for (const auto& [rule_name, rule] : rules) {
                    const auto res = simulate_policies(GammaLatentSampler{p.latent}, policies, rule, c.n, c.seed);
                    for (std::size_t k = 0; k < 2; ++k) {
                        const char* selection = k == 0 ? "bias" : "no-bias";
                        t.add_row({p.name, selection, rule_name, format_number(res[k].generalized_rr),
                                   format_number(res[k].share_significant), format_number(res[k].replication_rate)});
                        j.push_back({{"preset", p.name},
                                     {"selection", selection},
                                     {"power_rule", rule_name},
                                     {"generalized_rr", res[k].generalized_rr},
                                     {"share_significant", res[k].share_significant},
                                     {"replication_rate", res[k].replication_rate}});
                    }
                }
            }
            emit(c.format == "json" ? json_text(j) : t.str());
            return kExitOk;
        }
        if (*synth_cmd) {
            const ModelParams m = cli::resolve_model(c);
            emit(dataset_csv(generate_synthetic_dataset(m.latent, m.policy, n_published, c.seed)));
            return kExitOk;
        }
        if (*verify_cmd) {
            VerifyOptions o;
            o.n_draws = c.n;
            o.seed = c.seed;
            if (o.n_draws < kMinDraws) throw ConfigError("verify: --n must be at least 10^4");
            bool all = true;
            std::string report;
            for (const auto& r : run_verification(o)) {
                all = all && r.passed;
                report += std::string(r.passed ? "PASS " : "FAIL ") + r.name + ": " + r.detail + "\n";
            }
            emit(report);
            return all ? kExitOk : kExitVerify;
        }
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const EmptySetError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}

}  // namespace metarep
