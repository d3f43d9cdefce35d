#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/models/local_model.hpp"
#include "causalad/stats.hpp"
#include "causalad/timeseries.hpp"

namespace causalad {

/// Models covering every variable of a dataset exactly once.
struct ModelSet {
    std::vector<std::string> names;
    std::vector<models::LocalModel> models;

    std::size_t dimension() const { return names.size(); }

    std::size_t history() const {
        std::size_t h = 0;
        for (const auto& m : models) h = std::max(h, m.history());
        return h;
    }

    /// Index of the model that scores each variable; throws ConfigError on gaps or overlaps.
    std::vector<std::size_t> owners() const {
        constexpr auto none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> owner(names.size(), none);
        for (std::size_t k = 0; k < models.size(); ++k)
            for (auto v : models[k].variables) {
                if (v >= names.size()) throw ConfigError("model refers to an unknown variable index");
                if (owner[v] != none) throw ConfigError("variable '" + names[v] + "' has more than one model");
                owner[v] = k;
            }
        for (std::size_t v = 0; v < names.size(); ++v)
            if (owner[v] == none) throw ConfigError("missing model for variable '" + names[v] + "'");
        return owner;
    }
};

/// Per-row, per-variable tail probabilities M (T x d). Warmup rows hold NaN.
struct ProbabilityTable {
    Eigen::MatrixXd m;
    std::size_t warmup = 0;
};

inline ProbabilityTable probability_table(const ModelSet& set, const TimeSeriesMatrix& data) {
    if (data.names() != set.names) throw ConfigError("data columns do not match the variables the models were trained on");
    set.owners();
    ProbabilityTable out;
    out.warmup = std::min(set.history(), data.rows());
    out.m = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(set.dimension()),
                                      std::numeric_limits<double>::quiet_NaN());
    for (const auto& model : set.models) {
        const auto col = model.score_series(data);
        for (auto v : model.variables)
            for (std::size_t t = out.warmup; t < data.rows(); ++t)
                out.m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) = col[t];
    }
    return out;
}

struct AnomalyScore {
    double score = 0.0;
    std::size_t argmin = 0;
};

/// A = 1 - min_i M_i; ties in the minimum go to the lowest variable index.
inline AnomalyScore anomaly_score(std::span<const double> m) {
    if (m.empty()) throw ConfigError("no per-variable probabilities to combine");
    AnomalyScore out{0.0, 0};
    double lowest = m[0];
    for (std::size_t i = 1; i < m.size(); ++i)
        if (m[i] < lowest) {
            lowest = m[i];
            out.argmin = i;
        }
    out.score = 1.0 - lowest;
    return out;
}

inline double threshold_from_percentile(std::span<const double> scores, double n) {
    if (scores.empty()) throw ArgumentError("cannot take a percentile of no scores");
    if (!(n > 0.0 && n < 100.0)) throw ArgumentError("percentile must lie strictly between 0 and 100");
    return stats::percentile(scores, n);
}

struct DetectionReport {
    std::vector<std::int64_t> timesteps;
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<std::size_t> argmin;
    std::vector<bool> warmup;
    double threshold = 0.0;
    std::vector<std::string> names;
    Eigen::MatrixXd probabilities;  // per-variable M, NaN during warmup

    std::size_t size() const { return scores.size(); }

    std::size_t positives() const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1)); }

    /// Scores of rows outside the warmup period.
    std::vector<double> scored_values() const {
        std::vector<double> out;
        for (std::size_t t = 0; t < scores.size(); ++t)
            if (!warmup[t]) out.push_back(scores[t]);
        return out;
    }

    /// Re-labels every row against a new threshold (warmup rows stay 0).
    void relabel(double lambda) {
        threshold = lambda;
        for (std::size_t t = 0; t < scores.size(); ++t) labels[t] = !warmup[t] && scores[t] > lambda ? 1 : 0;
    }
};

/// Scores every row; rows without enough history are emitted as warmup with score 0 and label 0.
inline DetectionReport score_rows(const ModelSet& set, const TimeSeriesMatrix& data) {
    const auto table = probability_table(set, data);
    DetectionReport r;
    r.names = set.names;
    const auto t_len = data.rows();
    r.timesteps.resize(t_len);
    r.scores.assign(t_len, 0.0);
    r.labels.assign(t_len, 0);
    r.argmin.assign(t_len, 0);
    r.warmup.assign(t_len, false);
    std::vector<double> row(set.dimension());
    for (std::size_t t = 0; t < t_len; ++t) {
        r.timesteps[t] = data.start_index() + static_cast<std::int64_t>(t);
        if (t < table.warmup) {
            r.warmup[t] = true;
            continue;
        }
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = table.m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
        const auto a = anomaly_score(row);
        r.scores[t] = a.score;
        r.argmin[t] = a.argmin;
    }
    r.probabilities = table.m;
    return r;
}

inline DetectionReport detect(const ModelSet& set, const TimeSeriesMatrix& data, double lambda) {
    auto r = score_rows(set, data);
    r.relabel(lambda);
    return r;
}

/// Threshold taken as the n-th percentile of the scores of the data being labeled.
inline DetectionReport detect_percentile(const ModelSet& set, const TimeSeriesMatrix& data, double n) {
    auto r = score_rows(set, data);
    const auto pool = r.scored_values();
    r.relabel(threshold_from_percentile(pool, n));
    return r;
}

inline void write_report_csv(std::ostream& out, const DetectionReport& r) {
    out << "timestep,score,label,argmin_variable,warmup\n";
    for (std::size_t t = 0; t < r.size(); ++t)
        out << r.timesteps[t] << ',' << detail::format_double(r.scores[t]) << ',' << r.labels[t] << ','
            << (r.warmup[t] ? std::string() : r.names.at(r.argmin[t])) << ',' << (r.warmup[t] ? 1 : 0) << '\n';
}

inline void write_probabilities_csv(std::ostream& out, const DetectionReport& r) {
    out << "timestep";
    for (const auto& n : r.names) out << ',' << n;
    out << '\n';
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (r.warmup[t]) continue;
        out << r.timesteps[t];
        for (Eigen::Index i = 0; i < r.probabilities.cols(); ++i)
            out << ',' << detail::format_double(r.probabilities(static_cast<Eigen::Index>(t), i));
        out << '\n';
    }
}

}  // namespace causalad
