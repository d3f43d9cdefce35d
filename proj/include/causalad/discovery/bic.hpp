#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::discovery {

inline constexpr double kVarianceFloor = 1e-12;

/// Linear-Gaussian BIC local scores from a cached covariance matrix. Higher is better.
///
///   score(i | P) = -n ln(RSS / n) - penalty_discount * (|P| + 1) * ln n
///
/// Rank-deficient parent sets score -infinity.
class BicScorer {
public:
    BicScorer(const TimeSeriesMatrix& data, double penalty_discount)
        : n_(data.rows()), penalty_discount_(penalty_discount) {
        if (!(penalty_discount > 0.0)) throw ArgumentError("penalty_discount must be positive");
        const Eigen::MatrixXd& x = data.values();
        const Eigen::RowVectorXd mu = x.colwise().mean();
        const Eigen::MatrixXd centered = x.rowwise() - mu;
        cov_ = (centered.transpose() * centered) / static_cast<double>(n_);
    }

    std::size_t samples() const { return n_; }
    std::size_t variables() const { return static_cast<std::size_t>(cov_.rows()); }

    double local_score(std::size_t i, std::vector<std::size_t> parents) const {
        std::sort(parents.begin(), parents.end());
        auto key = std::make_pair(i, parents);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const double s = compute(i, parents);
        cache_.emplace(std::move(key), s);
        return s;
    }

private:
    double compute(std::size_t i, const std::vector<std::size_t>& parents) const {
        const auto n = static_cast<double>(n_);
        if (n_ <= parents.size() + 2) throw ArgumentError("too few samples for the parent set size");
        const auto ii = static_cast<Eigen::Index>(i);
        double rss_over_n = cov_(ii, ii);
        if (!parents.empty()) {
            const auto m = static_cast<Eigen::Index>(parents.size());
            Eigen::MatrixXd spp(m, m);
            Eigen::VectorXd spi(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                const auto pa = static_cast<Eigen::Index>(parents[static_cast<std::size_t>(a)]);
                spi(a) = cov_(pa, ii);
                for (Eigen::Index b = 0; b < m; ++b) spp(a, b) = cov_(pa, static_cast<Eigen::Index>(parents[static_cast<std::size_t>(b)]));
            }
            // Rank check on the correlation-scaled design so it is unit-free.
            const Eigen::VectorXd sd = spp.diagonal().cwiseSqrt();
            if ((sd.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
            const Eigen::MatrixXd scaled = sd.cwiseInverse().asDiagonal() * spp * sd.cwiseInverse().asDiagonal();
            Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
            if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < 1e-10)
                return -std::numeric_limits<double>::infinity();
            const Eigen::VectorXd beta_scaled = ldlt.solve(sd.cwiseInverse().asDiagonal() * spi);
            rss_over_n -= (sd.cwiseInverse().asDiagonal() * spi).dot(beta_scaled);
        }
        const double sigma2 = std::max(rss_over_n, kVarianceFloor);
        return -n * std::log(sigma2) - penalty_discount_ * static_cast<double>(parents.size() + 1) * std::log(n);
    }

    std::size_t n_;
    double penalty_discount_;
    Eigen::MatrixXd cov_;
    mutable std::map<std::pair<std::size_t, std::vector<std::size_t>>, double> cache_;
};

inline double bic_local_score(const TimeSeriesMatrix& data, std::size_t i, std::span<const std::size_t> parents,
                              double penalty_discount) {
    return BicScorer(data, penalty_discount).local_score(i, {parents.begin(), parents.end()});
}

}  // namespace causalad::discovery
