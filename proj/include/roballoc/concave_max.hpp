#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "roballoc/projection.hpp"

namespace roballoc {

struct ConcaveMaxResult {
    std::vector<double> y;
    double value = 0.0;
    double certified_gap = 0.0; // Frank-Wolfe gap at y; max f <= value + gap
    int iterations = 0;
    bool converged = false;
};

/**
 * Projected gradient ascent with Armijo backtracking for a concave f over
 * { y >= 0, sum y <= C }. Termination is certified: the linear maximization
 * of the gradient over the feasible set has the closed form
 * C max(0, max_s g_s), so the Frank-Wolfe gap bounds the suboptimality of
 * the returned point. Stops once that gap is at most tol.
 */
template <typename Value, typename Grad>
ConcaveMaxResult maximize_over_budget(Value&& f, Grad&& grad, std::size_t n, double cap, double tol,
                                      int max_iters = 5000, std::span<const double> y0 = {}) {
    ConcaveMaxResult res;
    if (y0.empty())
        res.y.assign(n, n > 0 ? cap / double(n) : 0.0);
    else
        res.y = project_budget(y0, cap);
    res.value = f(std::span<const double>(res.y));

    double step = 1.0;
    for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
        const std::vector<double> g = grad(std::span<const double>(res.y));
        double gmax = 0.0, gy = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            gmax = std::max(gmax, g[s]);
            gy += g[s] * res.y[s];
        }
        res.certified_gap = std::max(0.0, cap * gmax - gy);
        if (res.certified_gap <= tol) {
            res.converged = true;
            return res;
        }

        // backtracking on a projected step
        bool accepted = false;
        std::vector<double> trial(n);
        while (step > 1e-14) {
            for (std::size_t s = 0; s < n; ++s) trial[s] = res.y[s] + step * g[s];
            trial = project_budget(trial, cap);
            double lin = 0.0;
            for (std::size_t s = 0; s < n; ++s) lin += g[s] * (trial[s] - res.y[s]);
            const double fv = f(std::span<const double>(trial));
            if (fv >= res.value + 1e-4 * lin && fv >= res.value) {
                res.y = std::move(trial);
                res.value = fv;
                step = std::min(step * 2.0, 1e8);
                accepted = true;
                break;
            }
            step *= 0.5;
            trial.resize(n);
        }
        if (!accepted) break; // step underflow: no further numeric progress
    }
    return res;
}

} // namespace roballoc
