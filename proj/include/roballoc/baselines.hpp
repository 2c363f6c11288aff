#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "roballoc/beta_moments.hpp"
#include "roballoc/concave_max.hpp"
#include "roballoc/robust.hpp"
#include "roballoc/uncertainty.hpp"

// Non-robust baseline allocations, the plain Frank-Wolfe adversary they are
// compared against, and the worst-case evaluation harness.

namespace roballoc {

/// argmax_{y in Y} I(y; x_hat): point-estimate allocation.
inline ConcaveMaxResult solve_nominal(const InfluenceInstance& inst, double cap, double tol, int max_iters = 5000) {
    const std::vector<double> xh = inst.x_hat();
    return maximize_over_budget([&](std::span<const double> y) { return influence_eval(inst, y, xh); },
                                [&](std::span<const double> y) { return influence_grad_y(inst, y, xh); },
                                inst.num_channels(), cap, tol, max_iters);
}

/// argmax_{y in Y} E[I(y; X)] under the Beta posteriors.
inline ConcaveMaxResult solve_expected(const InfluenceInstance& inst, double cap, double tol, int max_iters = 5000) {
    return maximize_over_budget([&](std::span<const double> y) { return beta_expected_influence(inst, y); },
                                [&](std::span<const double> y) { return beta_expected_influence_grad(inst, y); },
                                inst.num_channels(), cap, tol, max_iters);
}

/**
 * Linear minimization over the D-norm set: min <gradient, x>. In the
 * c-parameterization this is a fractional knapsack; spend the budget gamma
 * on the edges with the most negative gradient * (u - x_hat), with at most
 * one fractional edge. Ellipsoidal sets have no such closed-form oracle and
 * are rejected.
 */
inline std::vector<double> dnorm_linear_oracle(std::span<const double> gradient, const UncertaintySet& uset) {
    if (uset.kind != UncertaintyKind::DNorm)
        throw unsupported_set_error("linear oracle is only available for D-norm sets");
    if (gradient.size() != uset.num_edges()) throw dimension_error("gradient size does not match edge count");

    const std::size_t m = uset.num_edges();
    std::vector<double> x(uset.lo.begin(), uset.lo.end());
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> rate(m);
    for (std::size_t e = 0; e < m; ++e) rate[e] = gradient[e] * (uset.hi[e] - uset.lo[e]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rate[a] != rate[b]) return rate[a] < rate[b];
        return a < b;
    });

    double remaining = uset.gamma;
    for (std::size_t e : order) {
        if (remaining <= 0.0) break;
        if (rate[e] >= 0.0) break; // moving this edge can only raise the objective
        const double c = std::min(1.0, remaining);
        x[e] = uset.lo[e] + c * (uset.hi[e] - uset.lo[e]);
        remaining -= c;
    }
    return x;
}

struct FwAdversaryResult {
    std::vector<double> x;
    std::vector<double> trace; // I(y; x_k) per iteration, including the start
};

/**
 * Plain Frank-Wolfe with the fixed stepsize 2/(k+2) on the nonconvex
 * x -> I(y; x) over a D-norm set; the reference point for the first-order
 * comparison against the certified submodular minimizer.
 */
inline FwAdversaryResult fw_adversary(const InfluenceInstance& inst, std::span<const double> y,
                                      const UncertaintySet& uset, int iters, std::span<const double> x0 = {}) {
    if (uset.kind != UncertaintyKind::DNorm)
        throw unsupported_set_error("fw_adversary requires a D-norm set");
    FwAdversaryResult res;
    if (x0.empty())
        res.x.assign(uset.lo.begin(), uset.lo.end());
    else
        res.x.assign(x0.begin(), x0.end());
    res.trace.push_back(influence_eval(inst, y, res.x));
    for (int k = 0; k < iters; ++k) {
        const std::vector<double> g = influence_grad_x(inst, y, res.x);
        const std::vector<double> s = dnorm_linear_oracle(g, uset);
        const double gamma = 2.0 / double(k + 2);
        for (std::size_t e = 0; e < res.x.size(); ++e) res.x[e] += gamma * (s[e] - res.x[e]);
        res.trace.push_back(influence_eval(inst, y, res.x));
    }
    return res;
}

struct AllocationRow {
    UncertaintyKind kind;
    double gamma = 0.0;
    std::string candidate;
    double worst_case = 0.0;
    CsfmCertificate cert;
};

/**
 * Worst-case influence of each candidate budget over a gamma grid for the
 * requested set kinds; one row per (kind, gamma, candidate).
 */
inline std::vector<AllocationRow> evaluate_allocations(
    const InfluenceInstance& inst, std::span<const UncertaintyKind> kinds, std::span<const double> gammas,
    const std::vector<std::pair<std::string, std::vector<double>>>& candidates, double delta,
    const FwOptions& fw_opt = {}) {
    std::vector<AllocationRow> rows;
    rows.reserve(kinds.size() * gammas.size() * candidates.size());
    for (UncertaintyKind kind : kinds) {
        for (double gamma : gammas) {
            const UncertaintySet uset = UncertaintySet::make(kind, inst, gamma);
            for (const auto& [name, y] : candidates) {
                AdversaryResult adv = adversary_best_response(inst, uset, y, delta, fw_opt);
                rows.push_back({kind, gamma, name, adv.value, adv.cert});
            }
        }
    }
    return rows;
}

struct SelectionComparison {
    std::size_t worst_case_action = 0;      // argmax_a min_theta payoff
    double worst_case_value = 0.0;          // its guaranteed value
    std::size_t ratio_action = 0;           // argmax_a min_theta payoff / best(theta)
    double ratio_action_worst_case = 0.0;   // worst-case value of the ratio pick
    double ratio_value = 0.0;               // the ratio it attains
};

/**
 * Compare the worst-case-value criterion against the worst-case
 * approximation-ratio criterion on a finite payoff table
 * payoff[action][scenario]. Ties resolve to the first index.
 */
inline SelectionComparison compare_selection_criteria(const std::vector<std::vector<double>>& payoff) {
    const std::size_t na = payoff.size();
    const std::size_t ns = payoff.front().size();
    std::vector<double> best_per_scenario(ns, -std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t th = 0; th < ns; ++th) best_per_scenario[th] = std::max(best_per_scenario[th], payoff[a][th]);

    SelectionComparison out;
    double best_wc = -std::numeric_limits<double>::infinity();
    double best_ratio = -std::numeric_limits<double>::infinity();
    std::vector<double> wc(na);
    for (std::size_t a = 0; a < na; ++a) {
        double w = std::numeric_limits<double>::infinity();
        double r = std::numeric_limits<double>::infinity();
        for (std::size_t th = 0; th < ns; ++th) {
            w = std::min(w, payoff[a][th]);
            r = std::min(r, payoff[a][th] / best_per_scenario[th]);
        }
        wc[a] = w;
        if (w > best_wc) {
            best_wc = w;
            out.worst_case_action = a;
        }
        if (r > best_ratio) {
            best_ratio = r;
            out.ratio_action = a;
        }
    }
    out.worst_case_value = best_wc;
    out.ratio_value = best_ratio;
    out.ratio_action_worst_case = wc[out.ratio_action];
    return out;
}

} // namespace roballoc
