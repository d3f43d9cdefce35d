#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/stats.hpp"

namespace causalad::models {

inline constexpr double kMinSigma = 1e-12;

/// Tail probability of an absolute deviation under the training deviations.
///
/// Up to the largest training value M(v) = (#{train >= v} + 1) / (N + 1). Beyond it a Gaussian
/// tail with the training stdev takes over, scaled to meet 1 / (N + 1) at the splice so M stays
/// continuous there and nonincreasing everywhere.
struct ResidualCalibration {
    std::vector<double> sorted_abs;
    double mean = 0.0;
    double stdev = kMinSigma;

    static ResidualCalibration fit(std::span<const double> residuals) {
        if (residuals.size() < 10) throw ArgumentError("calibration needs at least 10 residuals");
        ResidualCalibration c;
        c.sorted_abs.reserve(residuals.size());
        for (double r : residuals) {
            if (!std::isfinite(r)) throw ArgumentError("non-finite residual");
            c.sorted_abs.push_back(std::abs(r));
        }
        std::sort(c.sorted_abs.begin(), c.sorted_abs.end());
        c.mean = stats::mean(residuals);
        c.stdev = std::max(stats::stdev(residuals), kMinSigma);
        return c;
    }

    std::size_t size() const { return sorted_abs.size(); }

    double survival(double deviation) const {
        const double v = std::abs(deviation);
        const auto n = static_cast<double>(sorted_abs.size());
        if (std::isnan(v)) return 0.0;
        const double max = sorted_abs.back();
        if (v <= max) {
            const auto below = std::lower_bound(sorted_abs.begin(), sorted_abs.end(), v) - sorted_abs.begin();
            const auto at_or_above = static_cast<double>(sorted_abs.size()) - static_cast<double>(below);
            return (at_or_above + 1.0) / (n + 1.0);
        }
        const double scale = stdev * std::numbers::sqrt2;
        const double log_m = -std::log(n + 1.0) + stats::log_erfc(v / scale) - stats::log_erfc(max / scale);
        return std::exp(std::min(log_m, -std::log(n + 1.0)));
    }
};

}  // namespace causalad::models
