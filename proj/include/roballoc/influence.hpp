#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "roballoc/errors.hpp"

// Bipartite influence model. Channels S advertise to customers T along
// edges carrying a failure probability x_st; a budget y(s) controls how
// many independent attempts channel s makes. The expected number of
// influenced customers is
//
//     I(y; x) = sum_t ( 1 - prod_{(s,t) in E} x_st^{y(s)} ),
//
// with the convention 0^0 = 1 so a zero budget is a neutral factor.

namespace roballoc {

struct EdgeData {
    std::uint32_t channel = 0;
    std::uint32_t customer = 0;
    double x_hat = 0.0; // posterior mean of the failure probability
    double alpha = 1.0; // Beta posterior: 1 + observed failures
    double beta = 1.0;  // Beta posterior: 1 + observed successes
    double n_obs = 0.0; // number of Bernoulli observations behind the posterior
};

namespace detail {
// Lower clamp before taking logarithms; ln 0 is the only singularity of the
// model and practical uncertainty sets keep x_hat well above this.
inline constexpr double kMinLogArg = 1e-12;

inline double log_clamped(double x) {
    return std::log(std::clamp(x, kMinLogArg, 1.0));
}
} // namespace detail

/**
 * Immutable bipartite instance: channel/customer id tables plus edges with
 * Beta-posterior parameters. Values are safe to share across threads after
 * construction.
 */
class InfluenceInstance {
public:
    InfluenceInstance(std::vector<std::string> channels, std::vector<std::string> customers,
                      std::vector<EdgeData> edges)
        : channels_(std::move(channels)), customers_(std::move(customers)), edges_(std::move(edges)) {
        if (edges_.empty()) throw validation_error("instance has no edges");
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(edges_.size());
        for (const EdgeData& e : edges_) {
            if (e.channel >= channels_.size()) throw validation_error("edge references unknown channel");
            if (e.customer >= customers_.size()) throw validation_error("edge references unknown customer");
            if (!(e.x_hat >= 0.0 && e.x_hat <= 1.0)) throw validation_error("x_hat outside [0,1]");
            if (!(e.alpha >= 1.0) || !(e.beta >= 1.0)) throw validation_error("Beta counts must be >= 1");
            if (!(e.n_obs >= 0.0)) throw validation_error("negative observation count");
            const std::uint64_t key = (std::uint64_t(e.channel) << 32) | e.customer;
            if (!seen.insert(key).second) {
                throw validation_error("duplicate edge " + channels_[e.channel] + "," + customers_[e.customer]);
            }
        }
        by_customer_offset_.assign(customers_.size() + 1, 0);
        for (const EdgeData& e : edges_) ++by_customer_offset_[e.customer + 1];
        std::partial_sum(by_customer_offset_.begin(), by_customer_offset_.end(), by_customer_offset_.begin());
        by_customer_.resize(edges_.size());
        {
            std::vector<std::uint32_t> cursor(by_customer_offset_.begin(), by_customer_offset_.end() - 1);
            for (std::uint32_t e = 0; e < edges_.size(); ++e) by_customer_[cursor[edges_[e].customer]++] = e;
        }
        by_channel_offset_.assign(channels_.size() + 1, 0);
        for (const EdgeData& e : edges_) ++by_channel_offset_[e.channel + 1];
        std::partial_sum(by_channel_offset_.begin(), by_channel_offset_.end(), by_channel_offset_.begin());
        by_channel_.resize(edges_.size());
        {
            std::vector<std::uint32_t> cursor(by_channel_offset_.begin(), by_channel_offset_.end() - 1);
            for (std::uint32_t e = 0; e < edges_.size(); ++e) by_channel_[cursor[edges_[e].channel]++] = e;
        }
    }

    std::size_t num_channels() const { return channels_.size(); }
    std::size_t num_customers() const { return customers_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    const std::vector<std::string>& channels() const { return channels_; }
    const std::vector<std::string>& customers() const { return customers_; }
    const std::vector<EdgeData>& edges() const { return edges_; }
    const EdgeData& edge(std::size_t e) const { return edges_[e]; }

    std::span<const std::uint32_t> edges_of_customer(std::size_t t) const {
        return {by_customer_.data() + by_customer_offset_[t], by_customer_offset_[t + 1] - by_customer_offset_[t]};
    }
    std::span<const std::uint32_t> edges_of_channel(std::size_t s) const {
        return {by_channel_.data() + by_channel_offset_[s], by_channel_offset_[s + 1] - by_channel_offset_[s]};
    }

    /// Posterior means x_hat per edge, in edge order.
    std::vector<double> x_hat() const {
        std::vector<double> out(edges_.size());
        for (std::size_t e = 0; e < edges_.size(); ++e) out[e] = edges_[e].x_hat;
        return out;
    }

private:
    std::vector<std::string> channels_;
    std::vector<std::string> customers_;
    std::vector<EdgeData> edges_;
    std::vector<std::uint32_t> by_customer_offset_, by_customer_;
    std::vector<std::uint32_t> by_channel_offset_, by_channel_;
};

/// Budget over channels together with the cap C of the feasible set
/// Y = { y >= 0 : sum_s y(s) <= C }.
struct BudgetVector {
    std::vector<double> y;
    double cap = 0.0;

    bool feasible(double tol = 1e-9) const {
        double total = 0.0;
        for (double v : y) {
            if (v < -tol) return false;
            total += v;
        }
        return total <= cap + tol;
    }
};

namespace detail {
inline void check_dims(const InfluenceInstance& inst, std::span<const double> y, std::span<const double> x) {
    if (y.size() != inst.num_channels()) throw dimension_error("budget size does not match channel count");
    if (x.size() != inst.num_edges()) throw dimension_error("x size does not match edge count");
}

// Per-customer product prod_{(s,t)} x_st^{y(s)}, accumulated in log space and
// exponentiated once. Terms with y(s) = 0 are skipped (0^0 = 1).
inline double customer_log_product(const InfluenceInstance& inst, std::size_t t, std::span<const double> y,
                                   std::span<const double> x) {
    double acc = 0.0;
    for (std::uint32_t e : inst.edges_of_customer(t)) {
        const double ys = y[inst.edge(e).channel];
        if (ys != 0.0) acc += ys * log_clamped(x[e]);
    }
    return acc;
}
} // namespace detail

/**
 * Expected number of influenced customers I(y; x). Result lies in
 * [0, |T|]; customers without edges contribute zero.
 */
inline double influence_eval(const InfluenceInstance& inst, std::span<const double> y, std::span<const double> x) {
    detail::check_dims(inst, y, x);
    double total = 0.0;
    for (std::size_t t = 0; t < inst.num_customers(); ++t) {
        if (inst.edges_of_customer(t).empty()) continue;
        total += 1.0 - std::exp(detail::customer_log_product(inst, t, y, x));
    }
    return total;
}

inline double influence_eval(const InfluenceInstance& inst, const BudgetVector& y, std::span<const double> x) {
    return influence_eval(inst, std::span<const double>(y.y), x);
}

/**
 * Gradient of I(y; x) with respect to the budgets:
 *   d/dy(s) = - sum_{t : (s,t) in E} ln(x_st) prod_{(s',t)} x_s't^{y(s')}.
 * Nonnegative everywhere since x <= 1.
 */
inline std::vector<double> influence_grad_y(const InfluenceInstance& inst, std::span<const double> y,
                                            std::span<const double> x) {
    detail::check_dims(inst, y, x);
    std::vector<double> prod(inst.num_customers(), 0.0);
    for (std::size_t t = 0; t < inst.num_customers(); ++t) {
        prod[t] = std::exp(detail::customer_log_product(inst, t, y, x));
    }
    std::vector<double> grad(inst.num_channels(), 0.0);
    for (std::size_t s = 0; s < inst.num_channels(); ++s) {
        double g = 0.0;
        for (std::uint32_t e : inst.edges_of_channel(s)) {
            g -= detail::log_clamped(x[e]) * prod[inst.edge(e).customer];
        }
        grad[s] = g;
    }
    return grad;
}

/**
 * Gradient of I(y; x) with respect to the failure probabilities:
 *   d/dx_st = - y(s) x_st^{y(s)-1} prod_{(s',t) != (s,t)} x_s't^{y(s')},
 * nonpositive everywhere. Edges with y(s) = 0 get exactly zero.
 */
inline std::vector<double> influence_grad_x(const InfluenceInstance& inst, std::span<const double> y,
                                            std::span<const double> x) {
    detail::check_dims(inst, y, x);
    std::vector<double> grad(inst.num_edges(), 0.0);
    for (std::size_t t = 0; t < inst.num_customers(); ++t) {
        const auto es = inst.edges_of_customer(t);
        if (es.empty()) continue;
        const double prod = std::exp(detail::customer_log_product(inst, t, y, x));
        for (std::uint32_t e : es) {
            const double ys = y[inst.edge(e).channel];
            if (ys == 0.0) continue;
            const double xc = std::clamp(x[e], detail::kMinLogArg, 1.0);
            grad[e] = -ys * prod / xc;
        }
    }
    return grad;
}

/**
 * H(x) = I(y; x) for a fixed budget, with an incremental evaluation
 * protocol: a chain state tracks per-customer log-products so that moving a
 * single coordinate costs O(1). This is what makes the greedy pass over the
 * discretized lattice affordable (one evaluation per level).
 */
class AdversaryObjective {
public:
    AdversaryObjective(const InfluenceInstance& inst, std::vector<double> budgets)
        : inst_(&inst), y_(std::move(budgets)) {
        if (y_.size() != inst.num_channels()) throw dimension_error("budget size does not match channel count");
    }

    const std::vector<double>& budgets() const { return y_; }
    const InfluenceInstance& instance() const { return *inst_; }

    double operator()(std::span<const double> x) const { return influence_eval(*inst_, y_, x); }

    struct chain_state {
        std::vector<double> x;
        std::vector<double> log_prod; // per customer
        std::vector<double> prod;     // exp(log_prod)
        double sum_prod = 0.0;
        double active = 0.0; // customers with at least one edge
    };

    chain_state chain_begin(std::span<const double> x) const {
        detail::check_dims(*inst_, y_, x);
        chain_state st;
        st.x.assign(x.begin(), x.end());
        st.log_prod.assign(inst_->num_customers(), 0.0);
        st.prod.assign(inst_->num_customers(), 1.0);
        for (std::size_t t = 0; t < inst_->num_customers(); ++t) {
            if (inst_->edges_of_customer(t).empty()) {
                st.prod[t] = 1.0;
                continue;
            }
            st.active += 1.0;
            st.log_prod[t] = detail::customer_log_product(*inst_, t, y_, x);
            st.prod[t] = std::exp(st.log_prod[t]);
            st.sum_prod += st.prod[t];
        }
        return st;
    }

    double chain_value(const chain_state& st) const { return st.active - st.sum_prod; }

    /// Move coordinate (edge) e to value x_new; returns the new H value.
    double chain_move(chain_state& st, std::size_t e, double x_new) const {
        const EdgeData& ed = inst_->edge(e);
        const double ys = y_[ed.channel];
        if (ys != 0.0) {
            const std::size_t t = ed.customer;
            st.sum_prod -= st.prod[t];
            st.log_prod[t] += ys * (detail::log_clamped(x_new) - detail::log_clamped(st.x[e]));
            st.prod[t] = std::exp(st.log_prod[t]);
            st.sum_prod += st.prod[t];
        }
        st.x[e] = x_new;
        return chain_value(st);
    }

private:
    const InfluenceInstance* inst_;
    std::vector<double> y_;
};

} // namespace roballoc
