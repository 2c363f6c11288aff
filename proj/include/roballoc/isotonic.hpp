#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace roballoc {

namespace detail {
struct PavBlock {
    double mean;
    double weight;
    std::size_t count;
};
} // namespace detail

/**
 * Weighted isotonic regression with a nonincreasing constraint:
 *
 *     min_{rho_1 >= rho_2 >= ... >= rho_m}  sum_j r_j (rho_j - z_j)^2
 *
 * solved exactly by Pool Adjacent Violators in one left-to-right pass;
 * violating adjacent blocks merge into their weighted mean.
 */
inline void pav_isotonic_into(std::span<const double> z, std::span<const double> r, std::span<double> out,
                              std::vector<detail::PavBlock>& blocks) {
    blocks.clear();
    for (std::size_t j = 0; j < z.size(); ++j) {
        blocks.push_back({z[j], r[j], 1});
        // pool while the tail block rises above its predecessor
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
            detail::PavBlock b = blocks.back();
            blocks.pop_back();
            detail::PavBlock& a = blocks.back();
            const double w = a.weight + b.weight;
            a.mean = (a.mean * a.weight + b.mean * b.weight) / w;
            a.weight = w;
            a.count += b.count;
        }
    }
    std::size_t j = 0;
    for (const detail::PavBlock& b : blocks)
        for (std::size_t c = 0; c < b.count; ++c) out[j++] = b.mean;
}

inline std::vector<double> pav_isotonic(std::span<const double> z, std::span<const double> r) {
    if (z.size() != r.size()) throw std::invalid_argument("pav_isotonic: size mismatch");
    for (double w : r)
        if (!(w > 0.0)) throw std::invalid_argument("pav_isotonic: weights must be strictly positive");
    std::vector<double> out(z.size());
    std::vector<detail::PavBlock> blocks;
    blocks.reserve(z.size());
    pav_isotonic_into(z, r, out, blocks);
    return out;
}

} // namespace roballoc
