#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "roballoc/concave_max.hpp"
#include "roballoc/csfm.hpp"
#include "roballoc/influence.hpp"
#include "roballoc/projection.hpp"
#include "roballoc/uncertainty.hpp"

// Outer saddle-point solver for max_{y in Y} min_{x in X} I(y; x):
// subgradient ascent on the concave F(y) = min_x I(y; x) with Polyak
// steps. Each iteration calls the constrained submodular minimizer for the
// adversary's best response x(y), takes g = grad_y I(y; x(y)) (a
// supergradient of F by Danskin), and tracks the duality-gap sandwich
//
//     L = I(y; x(y))  <=  saddle value  <=  U = max_y' I(y'; x(y)).

namespace roballoc {

struct AdversaryResult {
    std::vector<double> x_worst;
    double value = 0.0; // I(y; x_worst)
    CsfmCertificate cert;
    std::vector<double> rho;    // optimal profile of the inner solve
    double lambda_star = 0.0;
};

/// l-infinity Lipschitz bound of x -> I(y; x) over the box: sum over edges
/// of sup |dI/dx_st| <= y(s) max(1, lo^(y(s)-1)).
inline double influence_lipschitz_bound(const InfluenceInstance& inst, std::span<const double> y,
                                        std::span<const double> lo) {
    double total = 0.0;
    for (std::size_t e = 0; e < inst.num_edges(); ++e) {
        const double ys = y[inst.edge(e).channel];
        if (ys == 0.0) continue;
        const double base = std::clamp(lo[e], detail::kMinLogArg, 1.0);
        total += ys * std::max(1.0, std::pow(base, ys - 1.0));
    }
    return total;
}

/**
 * Adversary's best response: minimize I(y; .) over the uncertainty set by
 * constrained submodular minimization on the box [x_hat, hi] with budget
 * gamma. Returns the continuous worst case, its influence value, and the
 * inner-solve certificate.
 */
inline AdversaryResult adversary_best_response(const InfluenceInstance& inst, const UncertaintySet& uset,
                                               std::span<const double> y, double delta,
                                               const FwOptions& fw_opt = {}) {
    AdversaryObjective h(inst, std::vector<double>(y.begin(), y.end()));
    const double lip = influence_lipschitz_bound(inst, y, uset.lo);
    CsfmSolution sol =
        constrained_min(h, [&uset](std::size_t e, double x) { return uset.regularizer(e, x); }, uset.gamma,
                        uset.lo, uset.hi, delta, lip, fw_opt);
    AdversaryResult res;
    res.x_worst = std::move(sol.x);
    res.value = sol.value;
    res.cert = sol.cert;
    res.rho = std::move(sol.rho);
    res.lambda_star = sol.cert.lambda_star;
    return res;
}

/**
 * Concave maximization U(x) = max_{y in Y} I(y; x) by certified projected
 * gradient ascent. The returned upper field adds the residual certificate
 * gap so it is a valid upper bound on the true maximum.
 */
struct InfluenceMaxResult {
    std::vector<double> y;
    double value = 0.0;
    double upper = 0.0;
    bool converged = false;
};

inline InfluenceMaxResult max_influence_given_x(const InfluenceInstance& inst, std::span<const double> x, double cap,
                                                double tol, int max_iters = 5000, std::span<const double> y0 = {}) {
    ConcaveMaxResult r = maximize_over_budget(
        [&](std::span<const double> yv) { return influence_eval(inst, yv, x); },
        [&](std::span<const double> yv) { return influence_grad_y(inst, yv, x); }, inst.num_channels(), cap, tol,
        max_iters, y0);
    return {std::move(r.y), r.value, r.value + r.certified_gap, r.converged};
}

enum class SolveStatus { Converged, IterationCap, Stalled };

inline const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::IterationCap: return "iteration-cap";
    case SolveStatus::Stalled: return "stalled";
    }
    return "unknown";
}

struct IterationRecord {
    int iter = 0;
    double lower = 0.0; // L^(k) = I(y^(k); x^(k))
    double upper = 0.0; // U^(k) = max_y I(y; x^(k)), certified
    double gap = 0.0;   // best-so-far sandwich U_best - L_best
    double step = 0.0;  // Polyak step
    double seconds = 0.0;
};

struct SolveReport {
    std::vector<IterationRecord> trace;
    std::vector<CsfmCertificate> inner_certs;
    std::vector<double> y_robust;
    std::vector<double> x_worst;       // adversary response at the reported budget
    std::vector<double> rho_best;      // profile of the best iterate's inner solve
    double rho_lambda_star = 0.0;
    double lower_best = -std::numeric_limits<double>::infinity();
    double upper_best = std::numeric_limits<double>::infinity();
    SolveStatus status = SolveStatus::IterationCap;

    double gap() const { return upper_best - lower_best; }
};

/// Subgradient stalled with a nonzero duality gap; carries the trace.
struct stalled_error : std::runtime_error {
    SolveReport report;
    explicit stalled_error(SolveReport r)
        : std::runtime_error("subgradient is zero while the duality gap exceeds epsilon"), report(std::move(r)) {}
};

struct RobustOptions {
    double epsilon = 1e-2;
    double delta = 1e-3;
    double epsilon_fw = -1.0;  // defaults to epsilon / 10
    double inner_tol = -1.0;   // concave-max tolerance, defaults to epsilon / 10
    int max_outer = 500;
    int max_fw_iters = 20000;
    int max_inner_iters = 5000;
    bool polyak_running_upper = true; // use U_best instead of U^(k) in the step
    std::vector<double> y0;           // empty: uniform C/|S|
};

/**
 * Subgradient ascent with Polyak stepsize and duality-gap termination.
 * Stops when U_best - L_best <= epsilon or the iteration cap is reached;
 * returns the iterate with the best certified lower bound.
 */
inline SolveReport solve_robust(const InfluenceInstance& inst, const UncertaintySet& uset, double cap,
                                const RobustOptions& opt = {}) {
    if (!(opt.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const double eps_fw = opt.epsilon_fw > 0.0 ? opt.epsilon_fw : opt.epsilon / 10.0;
    const double inner_tol = opt.inner_tol > 0.0 ? opt.inner_tol : opt.epsilon / 10.0;
    FwOptions fw_opt;
    fw_opt.epsilon_fw = eps_fw;
    fw_opt.max_iters = opt.max_fw_iters;

    const std::size_t n = inst.num_channels();
    SolveReport rep;
    std::vector<double> y;
    if (opt.y0.empty())
        y.assign(n, cap / double(n));
    else {
        if (opt.y0.size() != n) throw dimension_error("y0 size does not match channel count");
        y = project_budget(opt.y0, cap);
    }

    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < opt.max_outer; ++k) {
        AdversaryResult adv = adversary_best_response(inst, uset, y, opt.delta, fw_opt);
        const double lower = adv.value;
        const std::vector<double> g = influence_grad_y(inst, y, adv.x_worst);

        InfluenceMaxResult um = max_influence_given_x(inst, adv.x_worst, cap, inner_tol, opt.max_inner_iters, y);
        const double upper = um.upper;

        rep.upper_best = std::min(rep.upper_best, upper);
        if (lower > rep.lower_best) {
            rep.lower_best = lower;
            rep.y_robust = y;
            rep.x_worst = adv.x_worst;
            rep.rho_best = adv.rho;
            rep.rho_lambda_star = adv.lambda_star;
        }
        rep.inner_certs.push_back(adv.cert);

        double gnorm2 = 0.0;
        for (double v : g) gnorm2 += v * v;
        const double numerator = (opt.polyak_running_upper ? rep.upper_best : upper) - lower;
        const double step = gnorm2 > 0.0 ? std::max(numerator, 0.0) / gnorm2 : 0.0;

        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.trace.push_back({k, lower, upper, rep.gap(), step, seconds});

        if (rep.gap() <= opt.epsilon) {
            rep.status = SolveStatus::Converged;
            return rep;
        }
        if (gnorm2 == 0.0) {
            rep.status = SolveStatus::Stalled;
            throw stalled_error(std::move(rep));
        }

        std::vector<double> y_next(n);
        for (std::size_t s = 0; s < n; ++s) y_next[s] = y[s] + step * g[s];
        y = project_budget(y_next, cap);
    }
    rep.status = SolveStatus::IterationCap;
    return rep;
}

} // namespace roballoc
