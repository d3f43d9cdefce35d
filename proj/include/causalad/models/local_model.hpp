#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/graph.hpp"
#include "causalad/models/calibration.hpp"
#include "causalad/models/context.hpp"
#include "causalad/models/cvae.hpp"
#include "causalad/models/isolation_forest.hpp"
#include "causalad/models/linear.hpp"
#include "causalad/models/regressor.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::models {

enum class EstimatorKind { linear_gaussian, mlp_regressor, cvae, root_forecaster, isolation_forest };

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::linear_gaussian: return "linear_gaussian";
        case EstimatorKind::mlp_regressor: return "mlp_regressor";
        case EstimatorKind::cvae: return "cvae";
        case EstimatorKind::root_forecaster: return "root_forecaster";
        case EstimatorKind::isolation_forest: return "isolation_forest";
    }
    return "?";
}

inline EstimatorKind parse_estimator_kind(std::string_view s) {
    for (auto k : {EstimatorKind::linear_gaussian, EstimatorKind::mlp_regressor, EstimatorKind::cvae,
                   EstimatorKind::root_forecaster, EstimatorKind::isolation_forest})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown estimator '" + std::string(s) + "'");
}

inline bool is_conditional(EstimatorKind k) {
    return k == EstimatorKind::linear_gaussian || k == EstimatorKind::mlp_regressor || k == EstimatorKind::cvae;
}

/// Hyperparameters for every estimator family.
struct EstimatorConfig {
    NetConfig regressor{};
    CvaeConfig cvae{};
    NetConfig forecaster{};
    std::size_t forecast_window = 20;
    IsolationForestConfig forest{};
};

using Estimator = std::variant<LinearGaussian, MlpRegressor, Cvae, IsolationForest>;

/// A fitted per-variable (or joint root) model that maps observations to tail probabilities M.
struct LocalModel {
    EstimatorKind kind = EstimatorKind::linear_gaussian;
    std::vector<std::size_t> variables;  // variables receiving this model's M
    std::optional<std::size_t> target;   // predicted column; empty for the joint forest
    ContextLayout layout;
    Estimator estimator;
    ResidualCalibration calibration;

    std::size_t history() const { return models::history(layout); }

    /// Signed residual for predictors, raw isolation score for the forest.
    Eigen::RowVectorXd deviations(const PairSet& pairs) const {
        return std::visit(
            [&](const auto& est) -> Eigen::RowVectorXd {
                using T = std::decay_t<decltype(est)>;
                if constexpr (std::is_same_v<T, IsolationForest>)
                    return est.raw_score(pairs.contexts);
                else if constexpr (std::is_same_v<T, Cvae>)
                    return pairs.targets - est.reconstruct(pairs.targets, pairs.contexts);
                else
                    return pairs.targets - est.predict(pairs.contexts);
            },
            estimator);
    }

    std::vector<double> score_pairs(const PairSet& pairs) const {
        const Eigen::RowVectorXd dev = deviations(pairs);
        std::vector<double> m(static_cast<std::size_t>(dev.size()));
        for (Eigen::Index k = 0; k < dev.size(); ++k) m[static_cast<std::size_t>(k)] = calibration.survival(dev(k));
        return m;
    }

    /// M for every row of `data`; rows without enough history hold NaN.
    std::vector<double> score_series(const TimeSeriesMatrix& data) const {
        std::vector<double> out(data.rows(), std::numeric_limits<double>::quiet_NaN());
        if (data.rows() <= history()) return out;
        const auto pairs = gather_pairs(data, target, layout);
        const auto m = score_pairs(pairs);
        for (std::size_t k = 0; k < pairs.rows.size(); ++k) out[pairs.rows[k]] = m[k];
        return out;
    }
};

namespace detail {

inline ResidualCalibration calibrate_on(const LocalModel& model, const PairSet& pairs) {
    const Eigen::RowVectorXd dev = model.deviations(pairs);
    return ResidualCalibration::fit(std::span<const double>(dev.data(), static_cast<std::size_t>(dev.size())));
}

inline LocalModel finish(LocalModel model, const PairSet& pairs) {
    model.calibration = calibrate_on(model, pairs);
    return model;
}

}  // namespace detail

inline ResidualCalibration calibrate(std::span<const double> residuals) { return ResidualCalibration::fit(residuals); }

/// Conditional model of variable i given its parents in g.
inline LocalModel fit_conditional(const TimeSeriesMatrix& data, const Dag& g, std::size_t i, std::size_t window,
                                  EstimatorKind kind, const EstimatorConfig& cfg, std::uint64_t seed,
                                  const std::vector<bool>* keep = nullptr) {
    if (!is_conditional(kind)) throw ArgumentError(to_string(kind) + " is not a conditional estimator");
    const auto pairs = build_training_pairs(data, g, i, window, keep);
    LocalModel m;
    m.kind = kind;
    m.variables = {i};
    m.target = i;
    m.layout = parent_layout(g, i, window);
    switch (kind) {
        case EstimatorKind::linear_gaussian: m.estimator = LinearGaussian::fit(pairs); break;
        case EstimatorKind::mlp_regressor: m.estimator = MlpRegressor::fit(pairs, cfg.regressor, seed); break;
        default: m.estimator = Cvae::fit(pairs, cfg.cvae, seed); break;
    }
    return detail::finish(std::move(m), pairs);
}

/// Windowed univariate forecaster x_i(t) ~ [x_i(t - w), ..., x_i(t - 1)].
inline LocalModel fit_root_forecaster(const TimeSeriesMatrix& data, std::size_t column, const EstimatorConfig& cfg,
                                      std::uint64_t seed, const std::vector<bool>* keep = nullptr) {
    const auto w = cfg.forecast_window;
    if (w == 0) throw ArgumentError("forecast window must be at least 1");
    if (data.rows() <= w + 10) throw ArgumentError("series too short for the forecast window");
    LocalModel m;
    m.kind = EstimatorKind::root_forecaster;
    m.variables = {column};
    m.target = column;
    m.layout = window_layout(column, w);
    const auto pairs = gather_pairs(data, column, m.layout, keep);
    m.estimator = MlpRegressor::fit(pairs, cfg.forecaster, seed);
    return detail::finish(std::move(m), pairs);
}

/// One forest over the contemporaneous rows of several root columns; its M is shared by all of them.
inline LocalModel fit_isolation_forest(const TimeSeriesMatrix& data, std::span<const std::size_t> columns,
                                       const EstimatorConfig& cfg, std::uint64_t seed,
                                       const std::vector<bool>* keep = nullptr) {
    if (columns.size() < 2) throw ArgumentError("isolation forest needs at least 2 root variables");
    LocalModel m;
    m.kind = EstimatorKind::isolation_forest;
    m.variables.assign(columns.begin(), columns.end());
    m.layout = row_layout(columns);
    const auto pairs = gather_pairs(data, std::nullopt, m.layout, keep);
    if (pairs.size() < 50) throw ArgumentError("isolation forest needs at least 50 rows");
    m.estimator = IsolationForest::fit(pairs.contexts, cfg.forest, seed);
    return detail::finish(std::move(m), pairs);
}

inline void to_json(nlohmann::json& j, const LocalModel& m) {
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& tap : m.layout) layout.push_back({tap.column, tap.offset});
    j = {{"kind", to_string(m.kind)},
         {"variables", m.variables},
         {"target", m.target ? nlohmann::json(*m.target) : nlohmann::json(nullptr)},
         {"layout", layout},
         {"calibration",
          {{"sorted_abs", m.calibration.sorted_abs}, {"mean", m.calibration.mean}, {"stdev", m.calibration.stdev}}}};
    std::visit([&](const auto& est) { j["estimator"] = est; }, m.estimator);
}

inline void from_json(const nlohmann::json& j, LocalModel& m) {
    try {
        m.kind = parse_estimator_kind(j.at("kind").get<std::string>());
        m.variables = j.at("variables").get<std::vector<std::size_t>>();
        m.target = j.at("target").is_null() ? std::nullopt : std::optional<std::size_t>(j.at("target").get<std::size_t>());
        m.layout.clear();
        for (const auto& tap : j.at("layout")) m.layout.push_back({tap.at(0).get<std::size_t>(), tap.at(1).get<std::size_t>()});
        const auto& cal = j.at("calibration");
        m.calibration.sorted_abs = cal.at("sorted_abs").get<std::vector<double>>();
        m.calibration.mean = cal.at("mean").get<double>();
        m.calibration.stdev = cal.at("stdev").get<double>();
        if (m.calibration.sorted_abs.empty()) throw ParseError("empty calibration");
        const auto& est = j.at("estimator");
        switch (m.kind) {
            case EstimatorKind::linear_gaussian: m.estimator = est.get<LinearGaussian>(); break;
            case EstimatorKind::mlp_regressor:
            case EstimatorKind::root_forecaster: m.estimator = est.get<MlpRegressor>(); break;
            case EstimatorKind::cvae: m.estimator = est.get<Cvae>(); break;
            case EstimatorKind::isolation_forest: m.estimator = est.get<IsolationForest>(); break;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
}

}  // namespace causalad::models
