#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

#include "causalad/error.hpp"
#include "causalad/models/context.hpp"
#include "causalad/models/mlp.hpp"
#include "causalad/models/training.hpp"
#include "causalad/random.hpp"

namespace causalad::models {

/// Feedforward point predictor trained on squared error. Inputs and target are standardized internally.
struct MlpRegressor {
    Mlp net;
    FeatureScaling input_scaling;
    FeatureScaling target_scaling;

    /// Mean of 0.5 * (prediction - target)^2 over standardized columns; accumulates gradients when asked.
    static double loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& y, MlpGradients* grads = nullptr) {
        Mlp::Cache cache;
        const Eigen::MatrixXd out = net.forward(x, grads ? &cache : nullptr);
        const Eigen::RowVectorXd diff = out.row(0) - y;
        const auto n = static_cast<double>(y.size());
        if (grads) net.backward(cache, diff / n, *grads);
        return 0.5 * diff.squaredNorm() / n;
    }

    static MlpRegressor fit(const PairSet& pairs, const NetConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        if (pairs.size() < 10) throw ArgumentError("regressor fit needs at least 10 pairs");
        if (pairs.context_dim() < 1) throw ArgumentError("regressor needs a context of dimension at least 1");
        Rng rng(seed);
        MlpRegressor m;
        m.input_scaling = FeatureScaling::fit(pairs.contexts);
        m.target_scaling = FeatureScaling::fit(pairs.targets);
        const Eigen::MatrixXd x = m.input_scaling.apply(pairs.contexts);
        const Eigen::RowVectorXd y = m.target_scaling.apply(pairs.targets);
        m.net = Mlp(layer_sizes(pairs.context_dim(), cfg.hidden, 1), rng);

        Adam opt(m.net, cfg.learning_rate);
        BatchSchedule schedule(pairs.size(), cfg.batch_size);
        MlpGradients grads = m.net.zero_gradients();
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            schedule.shuffle(rng);
            for (std::size_t b = 0; b < schedule.batches(); ++b) {
                const auto idx = schedule.batch(b);
                const Eigen::MatrixXd xb = gather_columns(x, idx);
                const Eigen::RowVectorXd yb = gather_columns(y, idx);
                grads.set_zero();
                const double l = loss(m.net, xb, yb, &grads);
                if (!std::isfinite(l))
                    throw DivergenceError("regressor loss became non-finite at epoch " + std::to_string(epoch) +
                                          "; try a lower learning rate");
                opt.step(m.net, grads);
            }
        }
        if (!m.net.all_finite()) throw DivergenceError("regressor weights became non-finite; try a lower learning rate");
        return m;
    }

    Eigen::RowVectorXd predict(const Eigen::MatrixXd& contexts) const {
        const Eigen::MatrixXd out = net.forward(input_scaling.apply(contexts));
        return target_scaling.invert(out).row(0);
    }
};

inline void to_json(nlohmann::json& j, const MlpRegressor& m) {
    j = {{"net", mlp_to_json(m.net)},
         {"input_scaling", scaling_to_json(m.input_scaling)},
         {"target_scaling", scaling_to_json(m.target_scaling)}};
}

inline void from_json(const nlohmann::json& j, MlpRegressor& m) {
    m.net = mlp_from_json(j.at("net"));
    m.input_scaling = scaling_from_json(j.at("input_scaling"));
    m.target_scaling = scaling_from_json(j.at("target_scaling"));
}

}  // namespace causalad::models
