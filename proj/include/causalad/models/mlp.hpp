#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/random.hpp"

namespace causalad::models {

/// Parameter-shaped gradient buffers for an Mlp.
struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    void set_zero() {
        for (auto& w : weights) w.setZero();
        for (auto& b : biases) b.setZero();
    }
};

/// Feedforward network with tanh hidden layers and a linear output layer.
/// Samples are columns: forward() maps an (inputs x batch) matrix to (outputs x batch).
class Mlp {
public:
    /// Activations of every layer from one forward pass, input included.
    struct Cache {
        std::vector<Eigen::MatrixXd> activations;
    };

    Mlp() = default;

    /// Glorot-uniform weights, zero biases. `sizes` = {inputs, hidden..., outputs}.
    Mlp(std::vector<std::size_t> sizes, Rng& rng) : sizes_(std::move(sizes)) {
        if (sizes_.size() < 2) throw ArgumentError("an Mlp needs at least an input and an output layer");
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ArgumentError("layer sizes must be positive");
            const auto in = static_cast<Eigen::Index>(sizes_[l]);
            const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
            const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
            std::uniform_real_distribution<double> u(-limit, limit);
            Eigen::MatrixXd w(out, in);
            for (Eigen::Index i = 0; i < out; ++i)
                for (Eigen::Index j = 0; j < in; ++j) w(i, j) = u(rng);
            weights_.push_back(std::move(w));
            biases_.push_back(Eigen::VectorXd::Zero(out));
        }
    }

    Mlp(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases)
        : weights_(std::move(weights)), biases_(std::move(biases)) {
        if (weights_.empty() || weights_.size() != biases_.size()) throw ArgumentError("inconsistent Mlp parameters");
        sizes_.push_back(static_cast<std::size_t>(weights_.front().cols()));
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            if (static_cast<std::size_t>(weights_[l].cols()) != sizes_.back() || biases_[l].size() != weights_[l].rows())
                throw ArgumentError("inconsistent Mlp layer shapes");
            sizes_.push_back(static_cast<std::size_t>(weights_[l].rows()));
        }
    }

    std::size_t inputs() const { return sizes_.front(); }
    std::size_t outputs() const { return sizes_.back(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const {
        Eigen::MatrixXd a = x;
        if (cache) {
            cache->activations.clear();
            cache->activations.push_back(a);
        }
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            Eigen::MatrixXd z = weights_[l] * a;
            z.colwise() += biases_[l];
            if (l + 1 < weights_.size()) z = z.array().tanh();
            a = std::move(z);
            if (cache) cache->activations.push_back(a);
        }
        return a;
    }

    /// Accumulates parameter gradients for dL/d(output) = grad_out and returns dL/d(input).
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out, MlpGradients& grads) const {
        Eigen::MatrixXd delta = grad_out;
        for (std::size_t l = weights_.size(); l-- > 0;) {
            const Eigen::MatrixXd& a_in = cache.activations[l];
            grads.weights[l].noalias() += delta * a_in.transpose();
            grads.biases[l] += delta.rowwise().sum();
            Eigen::MatrixXd back = weights_[l].transpose() * delta;
            if (l > 0) back.array() *= 1.0 - a_in.array().square();
            delta = std::move(back);
        }
        return delta;
    }

    MlpGradients zero_gradients() const {
        MlpGradients g;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
            g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
        }
        return g;
    }

    std::size_t num_parameters() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l)
            n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
        return n;
    }

    /// Parameters in layer order, each weight matrix column-major followed by its bias.
    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(num_parameters());
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            out.insert(out.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
            out.insert(out.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
        }
        return out;
    }

    void unflatten(std::span<const double> flat) {
        if (flat.size() != num_parameters()) throw ArgumentError("parameter vector has the wrong length");
        std::size_t k = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            for (Eigen::Index i = 0; i < weights_[l].size(); ++i) weights_[l].data()[i] = flat[k++];
            for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l].data()[i] = flat[k++];
        }
    }

    static std::vector<double> flatten(const MlpGradients& g) {
        std::vector<double> out;
        for (std::size_t l = 0; l < g.weights.size(); ++l) {
            out.insert(out.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
            out.insert(out.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
        }
        return out;
    }

    bool all_finite() const {
        for (std::size_t l = 0; l < weights_.size(); ++l)
            if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
        return true;
    }

private:
    friend class Adam;
    std::vector<std::size_t> sizes_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

/// Adam with bias-corrected first and second moments.
class Adam {
public:
    Adam(const Mlp& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

    void step(Mlp& net, const MlpGradients& g) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        const double step = lr_ * std::sqrt(c2) / c1;
        for (std::size_t l = 0; l < net.weights_.size(); ++l) {
            update(net.weights_[l].array(), g.weights[l].array(), m_.weights[l].array(), v_.weights[l].array(), step);
            update(net.biases_[l].array(), g.biases[l].array(), m_.biases[l].array(), v_.biases[l].array(), step);
        }
    }

private:
    template <typename P, typename G, typename M, typename V>
    void update(P&& p, const G& g, M&& m, V&& v, double step) const {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.square();
        p -= step * m / (v.sqrt() + eps_);
    }

    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    MlpGradients m_, v_;
};

}  // namespace causalad::models
