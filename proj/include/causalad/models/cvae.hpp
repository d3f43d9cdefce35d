#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <string>

#include "causalad/error.hpp"
#include "causalad/log.hpp"
#include "causalad/models/context.hpp"
#include "causalad/models/mlp.hpp"
#include "causalad/models/training.hpp"
#include "causalad/random.hpp"

namespace causalad::models {

struct CvaeConfig {
    NetConfig net{};
    std::size_t latent = 5;
    std::size_t mc_samples = 1;

    void validate() const {
        net.validate();
        if (latent == 0) throw ArgumentError("latent dimension must be at least 1");
        if (mc_samples == 0) throw ArgumentError("mc_samples must be at least 1");
    }
};

/// KL(N(mu, exp(logvar)) || N(0, I)) per column.
inline Eigen::RowVectorXd gaussian_kl(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& logvar) {
    return 0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).matrix().colwise().sum();
}

struct ElboTerms {
    double reconstruction = 0.0;  // mean 0.5 * (x - x_hat)^2
    double kl = 0.0;              // mean KL
    double loss() const { return reconstruction + kl; }
};

/// Conditional VAE with Gaussian encoder q(z | x, c) and unit-variance Gaussian decoder p(x | c, z).
struct Cvae {
    Mlp encoder;  // [x, c] -> [mu, logvar]
    Mlp decoder;  // [c, z] -> x_hat
    std::size_t latent = 0;
    FeatureScaling context_scaling;
    FeatureScaling target_scaling;

    /// Negative ELBO on standardized data with the noise draws fixed by `eps`
    /// (latent x batch, one block per Monte Carlo sample stacked horizontally).
    static ElboTerms elbo(const Mlp& enc, const Mlp& dec, std::size_t latent, const Eigen::RowVectorXd& x,
                          const Eigen::MatrixXd& c, const Eigen::MatrixXd& eps, MlpGradients* enc_grads = nullptr,
                          MlpGradients* dec_grads = nullptr) {
        const auto b = x.size();
        const auto m = c.rows();
        const auto l = static_cast<Eigen::Index>(latent);
        const auto samples = eps.cols() / b;
        const bool want = enc_grads && dec_grads;

        Eigen::MatrixXd enc_in(1 + m, b);
        enc_in.row(0) = x;
        enc_in.bottomRows(m) = c;
        Mlp::Cache enc_cache;
        const Eigen::MatrixXd h = enc.forward(enc_in, want ? &enc_cache : nullptr);
        const Eigen::MatrixXd mu = h.topRows(l);
        const Eigen::MatrixXd logvar = h.bottomRows(l);
        const Eigen::MatrixXd sd = (0.5 * logvar.array()).exp();

        ElboTerms terms;
        terms.kl = gaussian_kl(mu, logvar).mean();
        const double n = static_cast<double>(b);
        const double weight = 1.0 / static_cast<double>(samples);
        Eigen::MatrixXd d_mu = mu / n;
        Eigen::MatrixXd d_logvar = 0.5 * (logvar.array().exp() - 1.0).matrix() / n;

        for (Eigen::Index s = 0; s < samples; ++s) {
            const Eigen::MatrixXd e = eps.middleCols(s * b, b);
            Eigen::MatrixXd dec_in(m + l, b);
            dec_in.topRows(m) = c;
            dec_in.bottomRows(l) = mu + (sd.array() * e.array()).matrix();
            Mlp::Cache dec_cache;
            const Eigen::MatrixXd out = dec.forward(dec_in, want ? &dec_cache : nullptr);
            const Eigen::RowVectorXd diff = out.row(0) - x;
            terms.reconstruction += weight * 0.5 * diff.squaredNorm() / n;
            if (want) {
                const Eigen::MatrixXd g_in = dec.backward(dec_cache, weight * diff / n, *dec_grads);
                const Eigen::MatrixXd g_z = g_in.bottomRows(l);
                d_mu += g_z;
                d_logvar += (g_z.array() * e.array() * sd.array() * 0.5).matrix();
            }
        }
        if (want) {
            Eigen::MatrixXd g_h(2 * l, b);
            g_h.topRows(l) = d_mu;
            g_h.bottomRows(l) = d_logvar;
            enc.backward(enc_cache, g_h, *enc_grads);
        }
        return terms;
    }

    static Cvae fit(const PairSet& pairs, const CvaeConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        if (pairs.size() < 100) throw ArgumentError("cvae fit needs at least 100 pairs");
        if (pairs.context_dim() < 1) throw ArgumentError("cvae needs a context of dimension at least 1");
        Rng rng(seed);
        Cvae v;
        v.latent = cfg.latent;
        v.context_scaling = FeatureScaling::fit(pairs.contexts);
        v.target_scaling = FeatureScaling::fit(pairs.targets);
        const Eigen::MatrixXd c = v.context_scaling.apply(pairs.contexts);
        const Eigen::RowVectorXd x = v.target_scaling.apply(pairs.targets);
        const auto m = pairs.context_dim();
        v.encoder = Mlp(layer_sizes(1 + m, cfg.net.hidden, 2 * cfg.latent), rng);
        v.decoder = Mlp(layer_sizes(m + cfg.latent, cfg.net.hidden, 1), rng);

        Adam enc_opt(v.encoder, cfg.net.learning_rate);
        Adam dec_opt(v.decoder, cfg.net.learning_rate);
        MlpGradients enc_grads = v.encoder.zero_gradients();
        MlpGradients dec_grads = v.decoder.zero_gradients();
        BatchSchedule schedule(pairs.size(), cfg.net.batch_size);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::size_t quiet_epochs = 0;
        bool warned = false;

        for (std::size_t epoch = 0; epoch < cfg.net.epochs; ++epoch) {
            schedule.shuffle(rng);
            double kl_sum = 0.0;
            for (std::size_t b = 0; b < schedule.batches(); ++b) {
                const auto idx = schedule.batch(b);
                const Eigen::MatrixXd cb = gather_columns(c, idx);
                const Eigen::RowVectorXd xb = gather_columns(x, idx);
                Eigen::MatrixXd eps(static_cast<Eigen::Index>(cfg.latent),
                                    static_cast<Eigen::Index>(idx.size() * cfg.mc_samples));
                for (Eigen::Index k = 0; k < eps.size(); ++k) eps.data()[k] = normal(rng);
                enc_grads.set_zero();
                dec_grads.set_zero();
                const auto terms = elbo(v.encoder, v.decoder, cfg.latent, xb, cb, eps, &enc_grads, &dec_grads);
                if (!std::isfinite(terms.loss()))
                    throw DivergenceError("cvae ELBO became non-finite at epoch " + std::to_string(epoch) +
                                          "; try a lower learning rate");
                enc_opt.step(v.encoder, enc_grads);
                dec_opt.step(v.decoder, dec_grads);
                kl_sum += terms.kl;
            }
            quiet_epochs = kl_sum / static_cast<double>(schedule.batches()) < 1e-6 ? quiet_epochs + 1 : 0;
            if (quiet_epochs >= 10 && !warned) {
                warn("cvae latent collapse: KL below 1e-6 for 10 consecutive epochs");
                warned = true;
            }
        }
        if (!v.encoder.all_finite() || !v.decoder.all_finite())
            throw DivergenceError("cvae weights became non-finite; try a lower learning rate");
        return v;
    }

    /// Decoder mean at z = encoder mean.
    Eigen::RowVectorXd reconstruct(const Eigen::RowVectorXd& targets, const Eigen::MatrixXd& contexts) const {
        const auto m = contexts.rows();
        const auto l = static_cast<Eigen::Index>(latent);
        const auto b = contexts.cols();
        const Eigen::MatrixXd c = context_scaling.apply(contexts);
        Eigen::MatrixXd enc_in(1 + m, b);
        enc_in.row(0) = target_scaling.apply(targets);
        enc_in.bottomRows(m) = c;
        const Eigen::MatrixXd h = encoder.forward(enc_in);
        Eigen::MatrixXd dec_in(m + l, b);
        dec_in.topRows(m) = c;
        dec_in.bottomRows(l) = h.topRows(l);
        return target_scaling.invert(decoder.forward(dec_in)).row(0);
    }
};

inline void to_json(nlohmann::json& j, const Cvae& v) {
    j = {{"encoder", mlp_to_json(v.encoder)},
         {"decoder", mlp_to_json(v.decoder)},
         {"latent", v.latent},
         {"context_scaling", scaling_to_json(v.context_scaling)},
         {"target_scaling", scaling_to_json(v.target_scaling)}};
}

inline void from_json(const nlohmann::json& j, Cvae& v) {
    v.encoder = mlp_from_json(j.at("encoder"));
    v.decoder = mlp_from_json(j.at("decoder"));
    v.latent = j.at("latent").get<std::size_t>();
    v.context_scaling = scaling_from_json(j.at("context_scaling"));
    v.target_scaling = scaling_from_json(j.at("target_scaling"));
    if (v.encoder.outputs() != 2 * v.latent || v.decoder.outputs() != 1)
        throw ParseError("cvae layer shapes do not match its latent dimension");
}

}  // namespace causalad::models
