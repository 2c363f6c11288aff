#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace roballoc {

/**
 * Delta-fine interpolation of a box onto a uniform per-coordinate grid:
 * A_i maps levels {0,...,k_i-1} to [lo_i, hi_i] with consecutive levels at
 * most delta apart and exact endpoints. A degenerate coordinate
 * (lo_i = hi_i) collapses to a single level.
 */
struct Discretization {
    double delta = 0.0;
    std::vector<std::vector<double>> levels;

    static Discretization build(std::span<const double> lo, std::span<const double> hi, double delta) {
        if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
        if (lo.size() != hi.size()) throw std::invalid_argument("lo/hi size mismatch");
        Discretization grid;
        grid.delta = delta;
        grid.levels.resize(lo.size());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (!(lo[i] <= hi[i])) throw std::invalid_argument("lo > hi");
            const double span = hi[i] - lo[i];
            if (span == 0.0) {
                grid.levels[i] = {lo[i]};
                continue;
            }
            // small slack so an exact multiple of delta is not rounded up
            const std::size_t segments = std::max<std::size_t>(1, std::size_t(std::ceil(span / delta - 1e-9)));
            auto& lv = grid.levels[i];
            lv.resize(segments + 1);
            for (std::size_t j = 0; j <= segments; ++j) lv[j] = lo[i] + span * double(j) / double(segments);
            lv.front() = lo[i];
            lv.back() = hi[i];
        }
        return grid;
    }

    std::size_t coords() const { return levels.size(); }
    std::size_t k(std::size_t i) const { return levels[i].size(); }
    double value(std::size_t i, std::size_t j) const { return levels[i][j]; }

    /// Continuous point A(x) for lattice levels x.
    std::vector<double> interpolate(std::span<const int> x) const {
        std::vector<double> out(coords());
        for (std::size_t i = 0; i < coords(); ++i) out[i] = levels[i][std::size_t(x[i])];
        return out;
    }

    /// Largest spacing actually realized; at most delta by construction.
    double max_spacing() const {
        double m = 0.0;
        for (const auto& lv : levels)
            for (std::size_t j = 1; j < lv.size(); ++j) m = std::max(m, lv[j] - lv[j - 1]);
        return m;
    }
};

} // namespace roballoc
