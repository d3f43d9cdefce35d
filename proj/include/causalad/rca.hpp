#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "causalad/detection.hpp"
#include "causalad/error.hpp"
#include "causalad/graph.hpp"

namespace causalad {

struct RcaResult {
    std::int64_t timestep = 0;
    std::vector<double> initial;  // S
    std::vector<double> final;    // RS
    std::vector<std::size_t> ranking;
};

/// S_i = 1 - M_i.
inline std::vector<double> initial_scores(std::span<const double> m) {
    if (m.empty()) throw ConfigError("no per-variable probabilities");
    std::vector<double> s(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) s[i] = 1.0 - m[i];
    return s;
}

namespace detail {

/// Topological order using edges of every lag, or nullopt when lagged edges close a cycle.
inline std::optional<std::vector<std::size_t>> all_lag_order(const Dag& g) {
    const auto d = g.size();
    std::vector<std::size_t> indegree(d, 0);
    for (std::size_t i = 0; i < d; ++i) indegree[i] = g.parents(i).size();
    std::vector<std::size_t> order;
    std::vector<bool> done(d, false);
    while (order.size() < d) {
        std::size_t next = d;
        for (std::size_t i = 0; i < d; ++i)
            if (!done[i] && indegree[i] == 0) {
                next = i;
                break;
            }
        if (next == d) return std::nullopt;
        done[next] = true;
        order.push_back(next);
        for (auto c : g.children(next)) --indegree[c];
    }
    return order;
}

}  // namespace detail

/// RS(i) = S(i) + alpha / |N(i)| * sum over children j of RS(j), evaluated children first.
inline std::vector<double> propagate(std::span<const double> s, const Dag& g, double alpha) {
    if (s.size() != g.size()) throw ArgumentError("score vector length does not match the graph");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in [0, 1)");
    const auto d = g.size();
    auto order = detail::all_lag_order(g);
    if (!order) order = g.topological_order();
    std::vector<double> rs(s.begin(), s.end());
    std::vector<bool> done(d, false);
    for (auto it = order->rbegin(); it != order->rend(); ++it) {
        const auto i = *it;
        const auto children = g.children(i);
        if (!children.empty()) {
            double sum = 0.0;
            for (auto c : children) sum += done[c] ? rs[c] : s[c];
            rs[i] = s[i] + alpha * sum / static_cast<double>(children.size());
        }
        done[i] = true;
    }
    return rs;
}

/// Indices of the k largest scores, descending, ties to the lower index.
inline std::vector<std::size_t> top_k(std::span<const double> rs, std::size_t k) {
    if (k < 1 || k > rs.size()) throw ArgumentError("k must lie in [1, number of variables]");
    std::vector<std::size_t> idx(rs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rs[a] > rs[b]; });
    idx.resize(k);
    return idx;
}

inline RcaResult analyze_row(std::int64_t timestep, std::span<const double> m, const Dag& g, double alpha, std::size_t k) {
    RcaResult r;
    r.timestep = timestep;
    r.initial = initial_scores(m);
    r.final = propagate(r.initial, g, alpha);
    r.ranking = top_k(r.final, k);
    return r;
}

/// Root-cause analysis for every labeled row of a report.
inline std::vector<RcaResult> analyze(const DetectionReport& report, const Dag& g, double alpha, std::size_t k) {
    std::vector<RcaResult> out;
    std::vector<double> row(report.names.size());
    for (std::size_t t = 0; t < report.size(); ++t) {
        if (report.labels[t] != 1 || report.warmup[t]) continue;
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = report.probabilities(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
        out.push_back(analyze_row(report.timesteps[t], row, g, alpha, k));
    }
    return out;
}

inline void write_rca_csv(std::ostream& out, const std::vector<RcaResult>& results, const std::vector<std::string>& names,
                          std::size_t k) {
    out << "timestep";
    for (std::size_t r = 1; r <= k; ++r) out << ",rc" << r;
    for (const auto& n : names) out << ",RS_" << n;
    out << '\n';
    for (const auto& r : results) {
        out << r.timestep;
        for (std::size_t j = 0; j < k; ++j) out << ',' << (j < r.ranking.size() ? names[r.ranking[j]] : std::string());
        for (double v : r.final) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

}  // namespace causalad
