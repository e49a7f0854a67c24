#pragma once

// CSV ingestion, report formatting and JSON conversions. All effect sizes and
// standard errors are Fisher-z units.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "metarep/error.hpp"
#include "metarep/estimator.hpp"
#include "metarep/simulator.hpp"

namespace metarep {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline bool parse_double(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

struct CsvFile {
    std::map<std::string, std::size_t> columns;
    std::vector<std::vector<std::string>> rows;  // data rows, header excluded
};

inline CsvFile read_csv(const std::string& path, const std::vector<std::string>& required) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    CsvFile csv;
    std::string line;
    bool header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (header) {
            if (!cells.empty() && cells[0].rfind("\xEF\xBB\xBF", 0) == 0) cells[0].erase(0, 3);
            for (std::size_t i = 0; i < cells.size(); ++i) csv.columns[cells[i]] = i;
            for (const auto& name : required) {
                if (!csv.columns.count(name)) throw DataError(path + ": missing column '" + name + "' in header");
            }
            header = false;
            continue;
        }
        if (cells.size() != csv.columns.size()) {
            throw DataError(path + ": row " + std::to_string(csv.rows.size() + 1) + " (line " +
                            std::to_string(line_no) + ") has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(csv.columns.size()));
        }
        csv.rows.push_back(std::move(cells));
    }
    if (header) throw DataError(path + ": empty file (header required)");
    return csv;
}

inline double numeric_cell(const CsvFile& csv, std::size_t row, const std::string& column, const std::string& path) {
    const std::string& text = csv.rows[row][csv.columns.at(column)];
    double v = 0.0;
    if (!parse_double(text, v)) {
        throw DataError(path + ": row " + std::to_string(row + 1) + ": column '" + column + "' is not numeric ('" +
                        text + "')");
    }
    return v;
}

}  // namespace detail

// CSV with header study_id,x,sigma. Rows are numbered from 1, header excluded.
inline Dataset load_dataset(const std::string& path) {
    const auto csv = detail::read_csv(path, {"study_id", "x", "sigma"});
    Dataset data;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        DataRecord r;
        r.study_id = csv.rows[i][csv.columns.at("study_id")];
        if (r.study_id.empty()) throw DataError(path + ": row " + std::to_string(i + 1) + ": empty study_id");
        r.x = detail::numeric_cell(csv, i, "x", path);
        r.sigma = detail::numeric_cell(csv, i, "sigma", path);
        if (!(r.sigma > 0.0)) throw DataError(path + ": row " + std::to_string(i + 1) + ": sigma must be > 0");
        if (!seen.insert(r.study_id).second) {
            throw DataError(path + ": row " + std::to_string(i + 1) + ": duplicate study_id '" + r.study_id + "'");
        }
        data.records.push_back(std::move(r));
    }
    return data;
}

// CSV with header x,sigma_r from observed replications; returns |x| / sigma_r.
inline std::vector<double> load_power_ratios(const std::string& path) {
    const auto csv = detail::read_csv(path, {"x", "sigma_r"});
    std::vector<double> pool;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double x = detail::numeric_cell(csv, i, "x", path);
        const double sr = detail::numeric_cell(csv, i, "sigma_r", path);
        if (!(sr > 0.0)) throw DataError(path + ": row " + std::to_string(i + 1) + ": sigma_r must be > 0");
        if (x == 0.0) throw DataError(path + ": row " + std::to_string(i + 1) + ": x must be nonzero");
        pool.push_back(std::abs(x) / sr);
    }
    if (pool.empty()) throw DataError(path + ": no rows");
    return pool;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

// Six significant digits; NaN prints as "nan".
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }

    std::string str() const {
        std::string out;
        auto emit = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        emit(header);
        for (const auto& r : rows) emit(r);
        return out;
    }
};

inline std::string dataset_csv(const Dataset& data) {
    CsvTable t{{"study_id", "x", "sigma"}, {}};
    char x[40], s[40];
    for (const auto& r : data.records) {
        std::snprintf(x, sizeof x, "%.17g", r.x);
        std::snprintf(s, sizeof s, "%.17g", r.sigma);
        t.add_row({r.study_id, x, s});
    }
    return t.str();
}

// Writes to `path`, or to `fallback` when path is empty or "-".
inline void write_text(const std::string& path, const std::string& content, std::ostream& fallback = std::cout) {
    if (path.empty() || path == "-") {
        fallback << content;
        fallback.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << content;
    out.close();
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// JSON conversions
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const GammaParams& g) { j = {{"shape", g.shape}, {"scale", g.scale}}; }

inline void from_json(const nlohmann::json& j, GammaParams& g) {
    g = GammaParams{j.at("shape").get<double>(), j.at("scale").get<double>()};
}

inline void to_json(nlohmann::json& j, const SimulationMetrics& m) {
    auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    j = nlohmann::json{{"replication_rate", m.replication_rate},
                       {"generalized_rr", m.generalized_rr},
                       {"rmr", m.rmr},
                       {"mean_bias", m.mean_bias},
                       {"coverage", m.coverage},
                       {"share_significant", m.share_significant},
                       {"n_included", m.n_included},
                       {"mc_se", m.mc_se},
                       {"rr_insignificant", num(m.rr_insignificant)},
                       {"mean_true_effect", m.mean_true_effect},
                       {"mean_x", m.mean_x},
                       {"mean_x_significant", m.mean_x_significant},
                       {"mean_xr_significant", m.mean_xr_significant},
                       {"mean_xr_significant_se", m.mean_xr_significant_se},
                       {"n_published", m.n_published},
                       {"n_draws", m.n_draws}};
}

// Accepts either an estimate result ({"params": {...}}) or the params block itself.
inline ModelParams model_from_json(const nlohmann::json& j) {
    try {
        const auto& p = j.contains("params") ? j.at("params") : j;
        return {{p.at("theta").get<GammaParams>(), p.at("sigma").get<GammaParams>()},
                StepPolicy{p.at("cutoffs").get<std::vector<double>>(), p.at("weights").get<std::vector<double>>()}};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model JSON: ") + e.what());
    }
}

inline nlohmann::json model_to_json(const ModelParams& p) {
    return {{"theta", p.latent.theta}, {"sigma", p.latent.sigma}, {"cutoffs", p.policy.cutoffs()},
            {"weights", p.policy.weights()}};
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
}

}  // namespace metarep
