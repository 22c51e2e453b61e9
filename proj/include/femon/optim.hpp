#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace femon {

struct OptimResult {
    std::vector<double> x;
    double fmin = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    double initial_step = 0.1;   ///< per-coordinate displacement of the start simplex
    double f_tolerance = 1e-10;  ///< stop when the simplex f-spread falls below this
    int max_iterations = 2000;
};

/// Derivative-free Nelder-Mead minimizer.  The objective may return +inf to
/// veto infeasible points; the start point itself must be feasible.
inline OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x0,
                               const NelderMeadOptions& opts = {}) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opts.initial_step;
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);
    if (!std::isfinite(fv[0]))
        throw std::invalid_argument("nelder_mead: start point is infeasible");

    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    OptimResult result;
    std::vector<std::size_t> order(n + 1);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        result.iterations = iter + 1;

        const double spread = std::abs(fv[worst] - fv[best]);
        if (spread <= opts.f_tolerance * (1.0 + std::abs(fv[best]))) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j)
                p[j] = centroid[j] + coef * (centroid[j] - simplex[worst][j]);
            return p;
        };

        auto reflected = blend(kReflect);
        const double fr = f(reflected);
        if (fr < fv[order[0]]) {
            auto expanded = blend(kExpand);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                fv[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = std::move(reflected);
            fv[worst] = fr;
            continue;
        }
        auto contracted = blend(fr < fv[worst] ? kContract : -kContract);
        const double fc = f(contracted);
        if (fc < std::min(fr, fv[worst])) {
            simplex[worst] = std::move(contracted);
            fv[worst] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                simplex[i][j] = simplex[best][j] + kShrink * (simplex[i][j] - simplex[best][j]);
            fv[i] = f(simplex[i]);
        }
    }

    std::size_t arg = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[arg]) arg = i;
    result.x = simplex[arg];
    result.fmin = fv[arg];
    return result;
}

}  // namespace femon
