#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "roballoc/errors.hpp"
#include "roballoc/influence.hpp"

// Uncertainty sets for the adversary: a box [lo, hi] per edge plus a
// separable budget constraint sum_st R_st(x_st) <= gamma. Two standard
// shapes are supported:
//
//   Ellipsoidal: R_st(x) = (x - x_hat)^2 / sigma_st^2 with sigma^2 the
//                Beta-posterior variance, box [x_hat, 1].
//   D-norm:      R_st(x) = (x - x_hat) / (u_st - x_hat), the fraction of
//                the interval [x_hat, u_st] consumed, box [x_hat, u].
//
// Both keep the lower corner at x_hat: influence is nonincreasing in x, so
// the adversary never moves below the estimate.

namespace roballoc {

enum class UncertaintyKind { Ellipsoidal, DNorm };

inline const char* to_string(UncertaintyKind k) {
    return k == UncertaintyKind::Ellipsoidal ? "ellipsoid" : "dnorm";
}

class UncertaintySet {
public:
    UncertaintyKind kind;
    std::vector<double> lo, hi; // per edge
    double gamma = 0.0;
    std::vector<double> sigma2; // Ellipsoidal only

    static UncertaintySet ellipsoidal(const InfluenceInstance& inst, double gamma) {
        if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
        UncertaintySet u;
        u.kind = UncertaintyKind::Ellipsoidal;
        u.gamma = gamma;
        u.lo.reserve(inst.num_edges());
        u.hi.assign(inst.num_edges(), 1.0);
        u.sigma2.reserve(inst.num_edges());
        for (const EdgeData& e : inst.edges()) {
            u.lo.push_back(e.x_hat);
            const double ab = e.alpha + e.beta;
            u.sigma2.push_back(e.alpha * e.beta / (ab * ab * (ab + 1.0)));
        }
        return u;
    }

    static UncertaintySet dnorm(const InfluenceInstance& inst, double gamma, std::vector<double> upper = {}) {
        if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
        UncertaintySet u;
        u.kind = UncertaintyKind::DNorm;
        u.gamma = gamma;
        if (upper.empty()) upper.assign(inst.num_edges(), 1.0);
        if (upper.size() != inst.num_edges()) throw dimension_error("upper bound size does not match edge count");
        u.hi = std::move(upper);
        u.lo.reserve(inst.num_edges());
        for (std::size_t e = 0; e < inst.num_edges(); ++e) {
            const double xh = inst.edge(e).x_hat;
            if (u.hi[e] < xh || u.hi[e] > 1.0) throw validation_error("D-norm upper bound outside [x_hat, 1]");
            u.lo.push_back(xh);
        }
        return u;
    }

    static UncertaintySet make(UncertaintyKind kind, const InfluenceInstance& inst, double gamma) {
        return kind == UncertaintyKind::Ellipsoidal ? ellipsoidal(inst, gamma) : dnorm(inst, gamma);
    }

    std::size_t num_edges() const { return lo.size(); }

    /// Per-edge R_st evaluated at x; zero at the lower corner (= x_hat).
    double regularizer(std::size_t e, double x) const {
        const double d = x - lo[e];
        if (kind == UncertaintyKind::Ellipsoidal) return d * d / sigma2[e];
        const double span = hi[e] - lo[e];
        return span > 0.0 ? d / span : 0.0; // pinned coordinate
    }
};

/**
 * Sum of the per-edge regularizers and the feasibility predicate
 * sum <= gamma. Throws domain_error if x leaves the box.
 */
inline std::pair<double, bool> regularizer_eval(const UncertaintySet& uset, std::span<const double> x) {
    if (x.size() != uset.num_edges()) throw dimension_error("x size does not match edge count");
    constexpr double box_tol = 1e-12;
    double total = 0.0;
    for (std::size_t e = 0; e < x.size(); ++e) {
        if (x[e] < uset.lo[e] - box_tol || x[e] > uset.hi[e] + box_tol)
            throw std::domain_error("x outside the uncertainty box");
        total += uset.regularizer(e, x[e]);
    }
    return {total, total <= uset.gamma};
}

} // namespace roballoc
