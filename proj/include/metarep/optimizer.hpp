#pragma once

// Nelder-Mead simplex minimisation with dimension-adaptive coefficients
// (Gao & Han 2012).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace metarep {

struct NelderMeadOptions {
    double initial_step = 0.1;
    double diameter_tol = 1e-6;
    std::size_t max_evals = 20'000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    double diameter = std::numeric_limits<double>::infinity();
    std::size_t n_evals = 0;
    bool converged = false;
};

// Largest distance from the best vertex to any other vertex.
inline double simplex_diameter(const std::vector<std::vector<double>>& simplex) {
    double d = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < simplex[0].size(); ++k) {
            const double diff = simplex[i][k] - simplex[0][k];
            s += diff * diff;
        }
        d = std::max(d, std::sqrt(s));
    }
    return d;
}

// Minimises f. Non-finite values are treated as +inf.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, const NelderMeadOptions& opt = {}) {
    const std::size_t n = start.size();
    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.n_evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    if (n == 0) {
        res.x = start;
        res.value = eval(start);
        res.diameter = 0.0;
        res.converged = std::isfinite(res.value);
        return res;
    }

    const double dim = static_cast<double>(n);
    const double alpha = 1.0;
    const double gamma = 1.0 + 2.0 / dim;
    const double rho = 0.75 - 1.0 / (2.0 * dim);
    const double shrink = 1.0 - 1.0 / dim;

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opt.initial_step;
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s(n + 1);
        std::vector<double> v(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            s[i] = std::move(simplex[order[i]]);
            v[i] = values[order[i]];
        }
        simplex = std::move(s);
        values = std::move(v);
    };
    auto along = [&](const std::vector<double>& centroid, double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[n][k] - centroid[k]);
        return p;
    };

    sort_simplex();
    while (res.n_evals < opt.max_evals) {
        res.diameter = simplex_diameter(simplex);
        if (res.diameter < opt.diameter_tol && std::isfinite(values[0])) {
            res.converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / dim;
        }

        const auto xr = along(centroid, -alpha);
        const double fr = eval(xr);
        if (fr < values[0]) {
            const auto xe = along(centroid, -alpha * gamma);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if (fr < values[n - 1]) {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            const bool outside = fr < values[n];
            const auto xc = outside ? along(centroid, -alpha * rho) : along(centroid, rho);
            const double fc = eval(xc);
            if (fc < (outside ? fr : values[n])) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t k = 0; k < n; ++k) {
                        simplex[i][k] = simplex[0][k] + shrink * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = eval(simplex[i]);
                }
            }
        }
        sort_simplex();
    }
    res.diameter = simplex_diameter(simplex);
    if (res.diameter < opt.diameter_tol && std::isfinite(values[0])) res.converged = true;
    res.x = simplex[0];
    res.value = values[0];
    return res;
}

}  // namespace metarep
