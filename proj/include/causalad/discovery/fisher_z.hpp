#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/stats.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::discovery {

struct CiTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t conditioning_size = 0;
    bool independent = true;
};

/// Sample correlation matrix plus sample size; computed once per search.
struct CorrelationMatrix {
    Eigen::MatrixXd r;
    std::size_t n = 0;

    static CorrelationMatrix from(const TimeSeriesMatrix& data) {
        const Eigen::MatrixXd& x = data.values();
        const Eigen::RowVectorXd mu = x.colwise().mean();
        const Eigen::MatrixXd centered = x.rowwise() - mu;
        Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows());
        Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
        CorrelationMatrix out;
        out.n = data.rows();
        out.r = cov;
        for (Eigen::Index i = 0; i < cov.rows(); ++i)
            for (Eigen::Index j = 0; j < cov.cols(); ++j) {
                const double denom = sd(i) * sd(j);
                out.r(i, j) = denom > 0.0 ? cov(i, j) / denom : (i == j ? 1.0 : 0.0);
            }
        return out;
    }
};

inline constexpr double kCorrelationClamp = 1.0 - 1e-10;

/// Partial correlation of (i, j) given S via the inverse of the correlation submatrix.
/// Throws TestError when the submatrix is singular.
inline double partial_correlation(const CorrelationMatrix& corr, std::size_t i, std::size_t j,
                                  std::span<const std::size_t> given) {
    if (given.empty()) return corr.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    std::vector<Eigen::Index> idx{static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)};
    for (auto s : given) idx.push_back(static_cast<Eigen::Index>(s));
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = corr.r(idx[a], idx[b]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw TestError("singular correlation submatrix");
    const Eigen::MatrixXd prec = lu.inverse();
    const double denom = std::sqrt(prec(0, 0) * prec(1, 1));
    if (!(denom > 0.0) || !std::isfinite(denom)) throw TestError("degenerate precision matrix");
    return -prec(0, 1) / denom;
}

/// Fisher-z conditional independence test of i and j given S.
inline CiTestResult fisher_z_test(const CorrelationMatrix& corr, std::size_t i, std::size_t j,
                                  std::span<const std::size_t> given, double alpha) {
    if (i == j) throw ArgumentError("fisher_z_test needs two distinct variables");
    for (auto s : given)
        if (s == i || s == j) throw ArgumentError("conditioning set contains a tested variable");
    if (corr.n <= given.size() + 3) throw ArgumentError("too few samples for the conditioning set size");
    double r = partial_correlation(corr, i, j, given);
    r = std::clamp(r, -kCorrelationClamp, kCorrelationClamp);
    const double z = 0.5 * std::log((1.0 + r) / (1.0 - r));
    CiTestResult out;
    out.conditioning_size = given.size();
    out.statistic = std::sqrt(static_cast<double>(corr.n - given.size() - 3)) * std::abs(z);
    out.p_value = std::clamp(stats::two_sided_normal_tail(out.statistic), 0.0, 1.0);
    out.independent = out.p_value > alpha;
    return out;
}

inline CiTestResult fisher_z_test(const TimeSeriesMatrix& data, std::size_t i, std::size_t j,
                                  std::span<const std::size_t> given, double alpha) {
    return fisher_z_test(CorrelationMatrix::from(data), i, j, given, alpha);
}

}  // namespace causalad::discovery
