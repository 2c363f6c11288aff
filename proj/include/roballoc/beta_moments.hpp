#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "roballoc/errors.hpp"
#include "roballoc/influence.hpp"
#include "roballoc/special_functions.hpp"

// Moments of the influence under the Beta posteriors on the failure
// probabilities. For X ~ Beta(a, b) and y >= 0,
//
//     E[X^y] = B(a + y, b) / B(a, b),
//
// so the expected influence and its exact gradient (via the digamma
// identity d/da log B(a,b) = psi(a) - psi(a+b)) have closed forms.

namespace roballoc {

namespace detail {
inline void check_budget_dim(const InfluenceInstance& inst, std::span<const double> y) {
    if (y.size() != inst.num_channels()) throw dimension_error("budget size does not match channel count");
}

// log of prod_{(s,t)} E[X_st^{c * y(s)}] for one customer.
inline double customer_log_moment(const InfluenceInstance& inst, std::size_t t, std::span<const double> y,
                                  double scale) {
    double acc = 0.0;
    for (std::uint32_t e : inst.edges_of_customer(t)) {
        const EdgeData& ed = inst.edge(e);
        const double ys = scale * y[ed.channel];
        if (ys != 0.0) acc += log_beta(ed.alpha + ys, ed.beta) - log_beta(ed.alpha, ed.beta);
    }
    return acc;
}
} // namespace detail

/// E[ I(y; X) ] under the per-edge Beta posteriors.
inline double beta_expected_influence(const InfluenceInstance& inst, std::span<const double> y) {
    detail::check_budget_dim(inst, y);
    double total = 0.0;
    for (std::size_t t = 0; t < inst.num_customers(); ++t) {
        if (inst.edges_of_customer(t).empty()) continue;
        total += 1.0 - std::exp(detail::customer_log_moment(inst, t, y, 1.0));
    }
    return total;
}

/// Exact gradient of beta_expected_influence; component s sums
/// -E[prod] * (psi(a+y) - psi(a+b+y)) over edges (s, t).
inline std::vector<double> beta_expected_influence_grad(const InfluenceInstance& inst, std::span<const double> y) {
    detail::check_budget_dim(inst, y);
    std::vector<double> prod(inst.num_customers(), 1.0);
    for (std::size_t t = 0; t < inst.num_customers(); ++t) {
        if (inst.edges_of_customer(t).empty()) continue;
        prod[t] = std::exp(detail::customer_log_moment(inst, t, y, 1.0));
    }
    std::vector<double> grad(inst.num_channels(), 0.0);
    for (std::size_t s = 0; s < inst.num_channels(); ++s) {
        double g = 0.0;
        for (std::uint32_t e : inst.edges_of_channel(s)) {
            const EdgeData& ed = inst.edge(e);
            const double a = ed.alpha + y[s];
            g -= prod[ed.customer] * (digamma(a) - digamma(a + ed.beta));
        }
        grad[s] = g;
    }
    return grad;
}

/// Var[ I(y; X) ]: customers use disjoint edges, so per-customer variances
/// of prod X^y add. Each term is E[prod X^{2y}] - E[prod X^y]^2.
inline double beta_variance_influence(const InfluenceInstance& inst, std::span<const double> y) {
    detail::check_budget_dim(inst, y);
    double total = 0.0;
    for (std::size_t t = 0; t < inst.num_customers(); ++t) {
        if (inst.edges_of_customer(t).empty()) continue;
        const double second = std::exp(detail::customer_log_moment(inst, t, y, 2.0));
        const double first = std::exp(detail::customer_log_moment(inst, t, y, 1.0));
        total += second - first * first;
    }
    return total;
}

} // namespace roballoc
