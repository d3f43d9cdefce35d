#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/graph.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::models {

/// One conditioning input: column `column` read `offset` steps before the scored timestep.
struct InputTap {
    std::size_t column = 0;
    std::size_t offset = 0;
    bool operator==(const InputTap&) const = default;
};

using ContextLayout = std::vector<InputTap>;

inline std::size_t history(const ContextLayout& layout) {
    std::size_t h = 0;
    for (const auto& tap : layout) h = std::max(h, tap.offset);
    return h;
}

/// Per parent j (index order): x_j(t - lag_j - k + 1), ..., x_j(t - lag_j).
inline ContextLayout parent_layout(const Dag& g, std::size_t i, std::size_t window) {
    if (window == 0) throw ArgumentError("window must be at least 1");
    ContextLayout out;
    for (const auto& p : g.parents(i))
        for (std::size_t back = window; back-- > 0;)
            out.push_back({p.index, static_cast<std::size_t>(p.lag) + back});
    return out;
}

/// x_i(t - window), ..., x_i(t - 1).
inline ContextLayout window_layout(std::size_t column, std::size_t window) {
    ContextLayout out;
    for (std::size_t back = window; back > 0; --back) out.push_back({column, back});
    return out;
}

/// Contemporaneous values of the given columns.
inline ContextLayout row_layout(std::span<const std::size_t> columns) {
    ContextLayout out;
    for (auto c : columns) out.push_back({c, 0});
    return out;
}

struct TrainingPair {
    double target = 0.0;
    std::vector<double> context;
    std::int64_t timestep = 0;
};

/// Columnar sequence of (target, context) pairs; column k of `contexts` belongs to targets(k).
struct PairSet {
    Eigen::RowVectorXd targets;
    Eigen::MatrixXd contexts;
    std::vector<std::size_t> rows;  // row index into the source matrix
    std::int64_t start_index = 0;

    std::size_t size() const { return rows.size(); }
    std::size_t context_dim() const { return static_cast<std::size_t>(contexts.rows()); }

    TrainingPair pair(std::size_t k) const {
        const auto kk = static_cast<Eigen::Index>(k);
        TrainingPair p;
        p.target = targets.size() ? targets(kk) : 0.0;
        p.context.assign(contexts.col(kk).data(), contexts.col(kk).data() + contexts.rows());
        p.timestep = start_index + static_cast<std::int64_t>(rows[k]);
        return p;
    }
};

/// Gathers pairs for every timestep with enough history. When `keep` is given, rows whose
/// flag is false are skipped as targets (their values may still appear in contexts).
inline PairSet gather_pairs(const TimeSeriesMatrix& data, std::optional<std::size_t> target, const ContextLayout& layout,
                            const std::vector<bool>* keep = nullptr) {
    const std::size_t h = history(layout);
    PairSet out;
    out.start_index = data.start_index();
    for (std::size_t t = h; t < data.rows(); ++t)
        if (!keep || (*keep)[t]) out.rows.push_back(t);
    const auto n = static_cast<Eigen::Index>(out.rows.size());
    out.contexts.resize(static_cast<Eigen::Index>(layout.size()), n);
    if (target) out.targets.resize(n);
    const Eigen::MatrixXd& v = data.values();
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto t = out.rows[static_cast<std::size_t>(k)];
        for (std::size_t c = 0; c < layout.size(); ++c)
            out.contexts(static_cast<Eigen::Index>(c), k) =
                v(static_cast<Eigen::Index>(t - layout[c].offset), static_cast<Eigen::Index>(layout[c].column));
        if (target) out.targets(k) = v(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(*target));
    }
    return out;
}

/// Training pairs (x_i(t), PA*(x_i(t))) for a variable with parents in g.
inline PairSet build_training_pairs(const TimeSeriesMatrix& data, const Dag& g, std::size_t i, std::size_t window,
                                    const std::vector<bool>* keep = nullptr) {
    if (!g.has_parents(i)) throw ArgumentError("variable '" + g.names().at(i) + "' has no parents; use a root model");
    const auto layout = parent_layout(g, i, window);
    if (data.rows() <= history(layout)) throw ArgumentError("series too short for the lag/window history");
    return gather_pairs(data, i, layout, keep);
}

}  // namespace causalad::models
