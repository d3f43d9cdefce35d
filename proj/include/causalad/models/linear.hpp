#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <vector>

#include "causalad/error.hpp"
#include "causalad/log.hpp"
#include "causalad/models/context.hpp"

namespace causalad::models {

inline constexpr double kRidgeFallback = 1e-6;

/// Ordinary least squares x = b0 + w . c.
struct LinearGaussian {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    bool ridge = false;

    static LinearGaussian fit(const PairSet& pairs) {
        const auto n = static_cast<Eigen::Index>(pairs.size());
        const auto m = pairs.contexts.rows();
        if (n < 10) throw ArgumentError("linear fit needs at least 10 pairs");
        if (m < 1) throw ArgumentError("linear fit needs a context of dimension at least 1");
        const Eigen::VectorXd c_mean = pairs.contexts.rowwise().mean();
        const double y_mean = pairs.targets.mean();
        const Eigen::MatrixXd xc = pairs.contexts.colwise() - c_mean;  // m x n
        const Eigen::VectorXd yc = (pairs.targets.array() - y_mean).matrix().transpose();

        LinearGaussian out;
        const Eigen::MatrixXd design = xc.transpose();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() == m) {
            out.weights = qr.solve(yc);
        } else {
            warn("rank-deficient design in linear fit; using ridge penalty 1e-6");
            Eigen::MatrixXd gram = xc * xc.transpose();
            gram.diagonal().array() += kRidgeFallback;
            out.weights = gram.ldlt().solve(xc * yc);
            out.ridge = true;
        }
        out.intercept = y_mean - c_mean.dot(out.weights);
        return out;
    }

    Eigen::RowVectorXd predict(const Eigen::MatrixXd& contexts) const {
        Eigen::RowVectorXd y = weights.transpose() * contexts;
        return y.array() + intercept;
    }
};

inline void to_json(nlohmann::json& j, const LinearGaussian& m) {
    j = {{"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
         {"intercept", m.intercept},
         {"ridge", m.ridge}};
}

inline void from_json(const nlohmann::json& j, LinearGaussian& m) {
    const auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.intercept = j.at("intercept").get<double>();
    m.ridge = j.value("ridge", false);
}

}  // namespace causalad::models
