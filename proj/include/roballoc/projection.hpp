#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace roballoc {

/**
 * Euclidean projection onto { y >= 0, sum y <= C }. If clipping negatives
 * already satisfies the cap that is the projection; otherwise project onto
 * the simplex { y >= 0, sum y = C } with the sorted-threshold rule.
 */
inline std::vector<double> project_budget(std::span<const double> y_raw, double cap) {
    if (!(cap >= 0.0)) throw std::invalid_argument("cap must be nonnegative");
    std::vector<double> out(y_raw.begin(), y_raw.end());
    double clipped_sum = 0.0;
    for (double& v : out) {
        v = std::max(v, 0.0);
        clipped_sum += v;
    }
    if (clipped_sum <= cap) return out;

    std::vector<double> sorted(y_raw.begin(), y_raw.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        prefix += sorted[j];
        const double candidate = (prefix - cap) / double(j + 1);
        if (j + 1 == sorted.size() || sorted[j + 1] <= candidate) {
            tau = candidate;
            break;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(y_raw[i] - tau, 0.0);
    return out;
}

} // namespace roballoc
