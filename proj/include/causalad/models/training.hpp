#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/models/mlp.hpp"
#include "causalad/random.hpp"

namespace causalad::models {

/// Optimizer schedule shared by the network estimators.
struct NetConfig {
    std::vector<std::size_t> hidden{10, 20, 10};
    std::size_t epochs = 80;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;

    void validate() const {
        if (epochs == 0) throw ArgumentError("epochs must be at least 1");
        if (batch_size == 0) throw ArgumentError("batch size must be at least 1");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be positive");
        for (auto h : hidden)
            if (h == 0) throw ArgumentError("hidden layer sizes must be positive");
    }
};

/// Per-row affine standardization of a (features x samples) matrix.
struct FeatureScaling {
    Eigen::VectorXd center;
    Eigen::VectorXd scale;

    static FeatureScaling fit(const Eigen::MatrixXd& x) {
        FeatureScaling s;
        s.center = x.rowwise().mean();
        const auto n = static_cast<double>(std::max<Eigen::Index>(x.cols(), 1));
        s.scale = ((x.colwise() - s.center).array().square().rowwise().sum() / n).sqrt().matrix();
        for (Eigen::Index i = 0; i < s.scale.size(); ++i)
            if (!(s.scale(i) > 1e-12)) s.scale(i) = 1.0;
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return ((x.colwise() - center).array().colwise() / scale.array()).matrix();
    }

    Eigen::MatrixXd invert(const Eigen::MatrixXd& x) const {
        return ((x.array().colwise() * scale.array()).matrix().colwise() + center);
    }
};

/// Shuffled mini-batch index ranges, reshuffled every epoch from the caller's generator.
class BatchSchedule {
public:
    BatchSchedule(std::size_t n, std::size_t batch) : order_(n), batch_(std::min(batch, n)) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    void shuffle(Rng& rng) { std::shuffle(order_.begin(), order_.end(), rng); }
    std::size_t batches() const { return (order_.size() + batch_ - 1) / batch_; }

    std::vector<std::size_t> batch(std::size_t b) const {
        const auto lo = b * batch_;
        const auto hi = std::min(order_.size(), lo + batch_);
        return {order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(hi)};
    }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_;
};

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(idx[k]));
    return out;
}

inline std::vector<std::size_t> layer_sizes(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t outputs) {
    std::vector<std::size_t> sizes{inputs};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(outputs);
    return sizes;
}

inline nlohmann::json mlp_to_json(const Mlp& net) {
    return {{"sizes", net.sizes()}, {"parameters", net.flatten()}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
    const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
    if (sizes.size() < 2) throw ParseError("network needs at least two layers");
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        w.emplace_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes[l + 1]), static_cast<Eigen::Index>(sizes[l])));
        b.emplace_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes[l + 1])));
    }
    Mlp net(std::move(w), std::move(b));
    const auto flat = j.at("parameters").get<std::vector<double>>();
    if (flat.size() != net.num_parameters()) throw ParseError("network parameter count does not match its layer sizes");
    net.unflatten(flat);
    return net;
}

inline nlohmann::json scaling_to_json(const FeatureScaling& s) {
    return {{"center", std::vector<double>(s.center.data(), s.center.data() + s.center.size())},
            {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
}

inline FeatureScaling scaling_from_json(const nlohmann::json& j) {
    const auto c = j.at("center").get<std::vector<double>>();
    const auto s = j.at("scale").get<std::vector<double>>();
    if (c.size() != s.size()) throw ParseError("scaling center/scale length mismatch");
    FeatureScaling out;
    out.center = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    out.scale = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    return out;
}

}  // namespace causalad::models
