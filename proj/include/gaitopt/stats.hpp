#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gaitopt {

/// Percentile q in [0, 100] with linear interpolation between order statistics
/// (rank = q / 100 * (n - 1)).
inline double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("percentile: empty sample");
    std::sort(values.begin(), values.end());
    const double rank = std::clamp(q, 0., 100.) / 100. * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(rank));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return percentile(std::move(values), 50.); }

} // namespace gaitopt
