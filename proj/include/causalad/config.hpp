#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include "causalad/discovery/discover.hpp"
#include "causalad/error.hpp"
#include "causalad/models/local_model.hpp"
#include "causalad/timeseries.hpp"

namespace causalad {

struct ModelConfig {
    models::EstimatorKind non_root = models::EstimatorKind::cvae;
    models::EstimatorKind root = models::EstimatorKind::root_forecaster;
    std::size_t window = 1;
    models::EstimatorConfig estimators{};
};

struct DetectionConfig {
    double percentile = 95.0;
    std::optional<double> threshold;
};

struct RcaConfig {
    double alpha = 0.5;
    std::size_t top_k = 3;
};

struct RetrainConfig {
    bool enabled = false;
    double removal_fraction = 0.03;
    std::size_t max_iterations = 10;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    double split = 0.5;
    NormalizationMode normalization = NormalizationMode::zscore;
    NanPolicy nan_policy = NanPolicy::drop_row;
    std::size_t threads = 1;
    discovery::DiscoveryOptions discovery{};
    ModelConfig models{};
    DetectionConfig detection{};
    RcaConfig rca{};
    RetrainConfig retrain{};

    void validate() const {
        if (!(split > 0.0 && split < 1.0)) throw ConfigError("split must lie in (0, 1)");
        if (!(discovery.alpha > 0.0 && discovery.alpha < 1.0)) throw ConfigError("discovery.alpha must lie in (0, 1)");
        if (!(discovery.penalty_discount > 0.0)) throw ConfigError("discovery.penalty_discount must be positive");
        if (discovery.max_lag < 0) throw ConfigError("discovery.max_lag must be nonnegative");
        if (models::is_conditional(models.root)) throw ConfigError("models.root must be root_forecaster or isolation_forest");
        if (!models::is_conditional(models.non_root))
            throw ConfigError("models.non_root must be linear_gaussian, mlp_regressor or cvae");
        if (models.window == 0) throw ConfigError("models.window must be at least 1");
        if (!(detection.percentile > 0.0 && detection.percentile < 100.0))
            throw ConfigError("detection.percentile must lie in (0, 100)");
        if (!(rca.alpha >= 0.0 && rca.alpha < 1.0)) throw ConfigError("rca.alpha must lie in [0, 1)");
        if (rca.top_k == 0) throw ConfigError("rca.top_k must be at least 1");
        if (!(retrain.removal_fraction > 0.0 && retrain.removal_fraction <= 0.2))
            throw ConfigError("retrain.removal_fraction must lie in (0, 0.2]");
        if (retrain.max_iterations == 0) throw ConfigError("retrain.max_iterations must be at least 1");
        try {
            models.estimators.regressor.validate();
            models.estimators.forecaster.validate();
            models.estimators.cvae.validate();
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
    }
};

namespace detail {

/// Reads one JSON object and rejects any key that was not consumed.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config section '" + label() + "' must be an object");
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config key '" + qualified(key) + "' has the wrong type");
        }
    }

    template <typename T>
    void read(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        if (j_.at(key).is_null()) {
            out.reset();
            return;
        }
        T value{};
        read(key, value);
        out = value;
    }

    template <typename T, typename Parse>
    void read_as(const std::string& key, T& out, Parse parse) {
        std::optional<std::string> text;
        read(key, text);
        if (text) out = parse(*text);
    }

    std::optional<StrictObject> section(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return StrictObject(j_.at(key), qualified(key));
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError("unknown config key '" + qualified(key) + "'");
    }

private:
    std::string label() const { return path_.empty() ? "<root>" : path_; }
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_net(StrictObject& o, models::NetConfig& n) {
    o.read("hidden", n.hidden);
    o.read("epochs", n.epochs);
    o.read("learning_rate", n.learning_rate);
    o.read("batch_size", n.batch_size);
}

inline nlohmann::json net_json(const models::NetConfig& n) {
    return {{"hidden", n.hidden}, {"epochs", n.epochs}, {"learning_rate", n.learning_rate}, {"batch_size", n.batch_size}};
}

inline NanPolicy parse_nan_policy(const std::string& s) {
    if (s == "drop_row") return NanPolicy::drop_row;
    if (s == "forward_fill") return NanPolicy::forward_fill;
    throw ConfigError("unknown nan_policy '" + s + "'");
}

}  // namespace detail

/// Parses a config document; absent keys keep their defaults, unknown keys are errors.
inline PipelineConfig parse_config(const nlohmann::json& j) {
    PipelineConfig c;
    detail::StrictObject root(j, "");
    root.read("seed", c.seed);
    root.read("split", c.split);
    root.read("threads", c.threads);
    root.read_as("normalization", c.normalization, [](const std::string& s) {
        try {
            return parse_normalization_mode(s);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    });
    root.read_as("nan_policy", c.nan_policy, detail::parse_nan_policy);
    if (auto d = root.section("discovery")) {
        d->read_as("algorithm", c.discovery.algorithm, [](const std::string& s) { return discovery::parse_algorithm(s); });
        d->read("alpha", c.discovery.alpha);
        d->read("max_degree", c.discovery.max_degree);
        d->read("penalty_discount", c.discovery.penalty_discount);
        d->read("max_lag", c.discovery.max_lag);
        d->finish();
    }
    if (auto m = root.section("models")) {
        m->read_as("non_root", c.models.non_root, [](const std::string& s) { return models::parse_estimator_kind(s); });
        m->read_as("root", c.models.root, [](const std::string& s) { return models::parse_estimator_kind(s); });
        m->read("window", c.models.window);
        auto& est = c.models.estimators;
        if (auto r = m->section("regressor")) {
            detail::read_net(*r, est.regressor);
            r->finish();
        }
        if (auto v = m->section("cvae")) {
            detail::read_net(*v, est.cvae.net);
            v->read("latent", est.cvae.latent);
            v->read("mc_samples", est.cvae.mc_samples);
            v->finish();
        }
        if (auto f = m->section("forecaster")) {
            detail::read_net(*f, est.forecaster);
            f->read("window", est.forecast_window);
            f->finish();
        }
        if (auto f = m->section("isolation_forest")) {
            f->read("trees", est.forest.trees);
            f->read("max_samples", est.forest.max_samples);
            f->finish();
        }
        m->finish();
    }
    if (auto d = root.section("detection")) {
        d->read("percentile", c.detection.percentile);
        d->read("threshold", c.detection.threshold);
        d->finish();
    }
    if (auto r = root.section("rca")) {
        r->read("alpha", c.rca.alpha);
        r->read("top_k", c.rca.top_k);
        r->finish();
    }
    if (auto r = root.section("retrain")) {
        r->read("enabled", c.retrain.enabled);
        r->read("removal_fraction", c.retrain.removal_fraction);
        r->read("max_iterations", c.retrain.max_iterations);
        r->finish();
    }
    root.finish();
    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
    const auto& est = c.models.estimators;
    nlohmann::json cvae = detail::net_json(est.cvae.net);
    cvae["latent"] = est.cvae.latent;
    cvae["mc_samples"] = est.cvae.mc_samples;
    nlohmann::json forecaster = detail::net_json(est.forecaster);
    forecaster["window"] = est.forecast_window;
    return {
        {"seed", c.seed},
        {"split", c.split},
        {"threads", c.threads},
        {"normalization", to_string(c.normalization)},
        {"nan_policy", c.nan_policy == NanPolicy::drop_row ? "drop_row" : "forward_fill"},
        {"discovery",
         {{"algorithm", discovery::to_string(c.discovery.algorithm)},
          {"alpha", c.discovery.alpha},
          {"max_degree", c.discovery.max_degree},
          {"penalty_discount", c.discovery.penalty_discount},
          {"max_lag", c.discovery.max_lag}}},
        {"models",
         {{"non_root", models::to_string(c.models.non_root)},
          {"root", models::to_string(c.models.root)},
          {"window", c.models.window},
          {"regressor", detail::net_json(est.regressor)},
          {"cvae", cvae},
          {"forecaster", forecaster},
          {"isolation_forest", {{"trees", est.forest.trees}, {"max_samples", est.forest.max_samples}}}}},
        {"detection",
         {{"percentile", c.detection.percentile},
          {"threshold", c.detection.threshold ? nlohmann::json(*c.detection.threshold) : nlohmann::json(nullptr)}}},
        {"rca", {{"alpha", c.rca.alpha}, {"top_k", c.rca.top_k}}},
        {"retrain",
         {{"enabled", c.retrain.enabled},
          {"removal_fraction", c.retrain.removal_fraction},
          {"max_iterations", c.retrain.max_iterations}}},
    };
}

inline constexpr const char* kConfigEnv = "CAUSALAD_CONFIG";

/// Loads a config file. The CAUSALAD_CONFIG environment variable, when set, replaces `path`.
/// With neither, the defaults are returned.
inline PipelineConfig load_config(std::optional<std::filesystem::path> path = std::nullopt) {
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
    if (!path) return PipelineConfig{};
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + path->string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path->string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

}  // namespace causalad
