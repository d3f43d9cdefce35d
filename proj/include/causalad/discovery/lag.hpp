#pragma once

#include <string>
#include <vector>

#include "causalad/discovery/meek.hpp"
#include "causalad/discovery/pc.hpp"
#include "causalad/graph.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::discovery {

/// Lagged copies of every column; column c of the expansion is variable base[c] at lag[c].
struct LagExpansion {
    TimeSeriesMatrix data;
    std::vector<std::string> base_names;
    std::vector<std::size_t> base;
    std::vector<int> lag;

    Knowledge knowledge() const { return Knowledge{lag}; }
};

/// (T - max_lag) x (d * (max_lag + 1)) matrix; row r holds x_v(r + max_lag - l) in column
/// l * d + v, named "<v>@<l>". max_lag = 0 returns the input unchanged.
inline LagExpansion lag_expand(const TimeSeriesMatrix& data, int max_lag) {
    if (max_lag < 0) throw ArgumentError("max_lag must be nonnegative");
    const std::size_t d = data.cols();
    LagExpansion out;
    out.base_names = data.names();
    if (max_lag == 0) {
        out.data = data;
        for (std::size_t v = 0; v < d; ++v) {
            out.base.push_back(v);
            out.lag.push_back(0);
        }
        return out;
    }
    const auto L = static_cast<std::size_t>(max_lag);
    if (data.rows() <= L) throw ArgumentError("series length must exceed max_lag");
    const std::size_t rows = data.rows() - L;
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d * (L + 1)));
    std::vector<std::string> names;
    for (std::size_t l = 0; l <= L; ++l) {
        for (std::size_t v = 0; v < d; ++v) {
            const auto c = static_cast<Eigen::Index>(l * d + v);
            values.col(c) = data.values().col(static_cast<Eigen::Index>(v)).segment(static_cast<Eigen::Index>(L - l),
                                                                                      static_cast<Eigen::Index>(rows));
            names.push_back(data.name(v) + "@" + std::to_string(l));
            out.base.push_back(v);
            out.lag.push_back(static_cast<int>(l));
        }
    }
    out.data = TimeSeriesMatrix(std::move(values), std::move(names), data.start_index() + static_cast<std::int64_t>(L));
    return out;
}

/// Orients cross-lag edges from past to present, then closes under Meek's rules while never
/// orienting against time.
inline void impose_time_order(MixedGraph& g, const Knowledge& kn) {
    if (kn.empty()) return;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = a + 1; b < g.size(); ++b) {
            if (!g.adjacent(a, b) || !kn.crosses_tiers(a, b)) continue;
            if (kn.allows(a, b))
                g.orient(a, b);
            else
                g.orient(b, a);
        }
    apply_meek_rules(g, true, [&](std::size_t a, std::size_t b) { return kn.allows(a, b); });
}

/// Maps a graph over lagged copies back to the base variables. Cross-lag edges become lagged
/// directed edges (smallest lag wins); same-lag edges become contemporaneous edges, the
/// lowest-lag copy taking precedence. Self-lagged edges are dropped.
inline MixedGraph collapse_lagged_graph(const MixedGraph& expanded, const LagExpansion& ex) {
    MixedGraph out(ex.base_names);
    if (ex.base_names.size() == expanded.size()) return expanded;
    std::vector<std::vector<bool>> contemporaneous_set(ex.base_names.size(), std::vector<bool>(ex.base_names.size(), false));
    // Process same-lag edges by increasing lag so lag-0 copies decide orientation.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < expanded.size(); ++a)
        for (std::size_t b = a + 1; b < expanded.size(); ++b)
            if (expanded.adjacent(a, b)) pairs.emplace_back(a, b);
    std::stable_sort(pairs.begin(), pairs.end(), [&](auto p, auto q) {
        return std::min(ex.lag[p.first], ex.lag[p.second]) < std::min(ex.lag[q.first], ex.lag[q.second]);
    });
    for (auto [a, b] : pairs) {
        const auto u = ex.base[a], v = ex.base[b];
        if (u == v) continue;
        if (ex.lag[a] != ex.lag[b]) {
            const auto src = ex.lag[a] > ex.lag[b] ? a : b;
            const auto dst = src == a ? b : a;
            const int lag = std::abs(ex.lag[a] - ex.lag[b]);
            const auto existing = out.lag(ex.base[src], ex.base[dst]);
            if (!existing || *existing > lag) out.add_directed(ex.base[src], ex.base[dst], lag);
            continue;
        }
        if (contemporaneous_set[u][v]) continue;
        contemporaneous_set[u][v] = contemporaneous_set[v][u] = true;
        // Keep a lagged edge in the same direction; a contemporaneous one supersedes it.
        if (expanded.has_directed(a, b))
            out.add_directed(u, v, 0);
        else if (expanded.has_directed(b, a))
            out.add_directed(v, u, 0);
        else
            out.add_undirected(u, v);
    }
    return out;
}

}  // namespace causalad::discovery
