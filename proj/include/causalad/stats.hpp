#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "causalad/error.hpp"

namespace causalad::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 2 * (1 - Phi(|z|)), computed without cancellation.
inline double two_sided_normal_tail(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

/// log(erfc(x)) for x >= 0, using the asymptotic series once erfc underflows.
inline double log_erfc(double x) {
    if (x < 25.0) return std::log(std::erfc(x));
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
    return -x2 - std::log(x * std::sqrt(std::numbers::pi)) + std::log(series);
}

inline double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double stdev(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

/// Linear-interpolation percentile (the "linear" method of numpy), q in [0, 100].
inline double percentile(std::span<const double> values, double q) {
    if (values.empty()) throw ArgumentError("percentile of an empty sequence");
    if (!(q >= 0.0 && q <= 100.0)) throw ArgumentError("percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::span<const double> values) { return percentile(values, 50.0); }

}  // namespace causalad::stats
