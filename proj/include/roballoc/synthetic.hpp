#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "roballoc/influence.hpp"

// Synthetic instance generation: true failure probabilities x = 1 - p with
// p ~ U[0, p_max], Beta posteriors built from simulated Bernoulli
// observations. Fully deterministic under a fixed seed (mt19937_64 plus
// explicit bit-to-double mapping; no implementation-defined distributions).

namespace roballoc {

namespace detail {
inline double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}
} // namespace detail

struct SyntheticSpec {
    std::size_t n_channels = 6;
    std::size_t n_customers = 2;
    std::size_t n_edges = 0;   // 0: complete bipartite
    double p_max = 0.4;        // transmission probabilities drawn from [0, p_max]
    double n_obs_min = 10.0;   // observation counts log-uniform in [min, max]
    double n_obs_max = 1e4;
    double n_obs_fixed = -1.0; // >= 0: use this count on every edge instead
};

struct SyntheticInstance {
    InfluenceInstance instance;
    std::vector<double> x_true; // per edge, in edge order
};

inline SyntheticInstance gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.n_channels < 1 || spec.n_customers < 1) throw std::invalid_argument("sizes must be at least 1");
    std::mt19937_64 rng(seed);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    if (spec.n_edges == 0) {
        pairs.reserve(spec.n_channels * spec.n_customers);
        for (std::uint32_t s = 0; s < spec.n_channels; ++s)
            for (std::uint32_t t = 0; t < spec.n_customers; ++t) pairs.emplace_back(s, t);
    } else {
        const std::size_t want = spec.n_edges;
        if (want < spec.n_channels || want < spec.n_customers)
            throw std::invalid_argument("edge count cannot cover every channel and customer");
        if (want > spec.n_channels * spec.n_customers)
            throw std::invalid_argument("edge count exceeds the complete bipartite graph");
        std::unordered_set<std::uint64_t> seen;
        auto add = [&](std::uint32_t s, std::uint32_t t) {
            const std::uint64_t key = (std::uint64_t(s) << 32) | t;
            if (seen.insert(key).second) pairs.emplace_back(s, t);
        };
        // cover every channel and every customer first, then fill randomly
        for (std::uint32_t s = 0; s < spec.n_channels; ++s)
            add(s, std::uint32_t(detail::uniform01(rng) * double(spec.n_customers)) % spec.n_customers);
        for (std::uint32_t t = 0; t < spec.n_customers; ++t)
            add(std::uint32_t(detail::uniform01(rng) * double(spec.n_channels)) % spec.n_channels, t);
        while (pairs.size() < want) {
            const std::uint32_t s = std::uint32_t(detail::uniform01(rng) * double(spec.n_channels)) % spec.n_channels;
            const std::uint32_t t = std::uint32_t(detail::uniform01(rng) * double(spec.n_customers)) % spec.n_customers;
            add(s, t);
        }
    }

    // sorted edge order, with id tables in first-appearance order, so that
    // writing and re-parsing the instance reproduces it exactly
    std::sort(pairs.begin(), pairs.end());

    std::vector<EdgeData> edges;
    edges.reserve(pairs.size());
    std::vector<double> x_true;
    x_true.reserve(pairs.size());
    for (auto [s, t] : pairs) {
        const double p = spec.p_max * detail::uniform01(rng);
        const double x = 1.0 - p;
        double n_obs;
        if (spec.n_obs_fixed >= 0.0) {
            n_obs = std::floor(spec.n_obs_fixed);
        } else {
            const double lo = std::log(spec.n_obs_min), hi = std::log(spec.n_obs_max);
            n_obs = std::floor(std::exp(lo + (hi - lo) * detail::uniform01(rng)));
        }
        double failures = 0.0; // draws of the event with probability x
        for (double i = 0.0; i < n_obs; i += 1.0)
            if (detail::uniform01(rng) < x) failures += 1.0;
        EdgeData e;
        e.channel = s;
        e.customer = t;
        e.alpha = 1.0 + failures;
        e.beta = 1.0 + (n_obs - failures);
        e.n_obs = n_obs;
        e.x_hat = e.alpha / (e.alpha + e.beta);
        edges.push_back(e);
        x_true.push_back(x);
    }

    constexpr std::uint32_t unseen = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> chan_map(spec.n_channels, unseen), cust_map(spec.n_customers, unseen);
    std::vector<std::string> channels, customers;
    for (EdgeData& e : edges) {
        if (chan_map[e.channel] == unseen) {
            chan_map[e.channel] = std::uint32_t(channels.size());
            channels.push_back("s" + std::to_string(e.channel));
        }
        if (cust_map[e.customer] == unseen) {
            cust_map[e.customer] = std::uint32_t(customers.size());
            customers.push_back("t" + std::to_string(e.customer));
        }
        e.channel = chan_map[e.channel];
        e.customer = cust_map[e.customer];
    }
    return {InfluenceInstance(std::move(channels), std::move(customers), std::move(edges)), std::move(x_true)};
}

} // namespace roballoc
