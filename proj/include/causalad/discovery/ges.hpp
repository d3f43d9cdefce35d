#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "causalad/discovery/bic.hpp"
#include "causalad/discovery/extension.hpp"
#include "causalad/graph.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::discovery {

struct GesOptions {
    std::size_t max_degree = 5;
    double penalty_discount = 20.0;
};

/// Search result with the total score after every applied operator.
struct GesTrace {
    MixedGraph cpdag;
    std::vector<double> forward_scores;
    std::vector<double> backward_scores;
};

/// Sum of local scores of a consistent extension. BIC is score-equivalent, so this is a
/// property of the equivalence class.
inline double total_score(const MixedGraph& cpdag, const BicScorer& scorer) {
    const Dag dag = pdag_to_dag_or_fallback(cpdag);
    double s = 0.0;
    for (std::size_t i = 0; i < dag.size(); ++i) s += scorer.local_score(i, dag.graph().directed_parents(i));
    return s;
}

namespace detail {

inline std::vector<std::size_t> intersect(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline std::vector<std::size_t> unite(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

inline bool is_clique(const MixedGraph& g, const std::vector<std::size_t>& nodes) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (!g.adjacent(nodes[i], nodes[j])) return false;
    return true;
}

/// True when some semi-directed path from `from` to `to` avoids every node in `blocked`.
inline bool semi_directed_path_avoiding(const MixedGraph& g, std::size_t from, std::size_t to,
                                        const std::vector<std::size_t>& blocked) {
    std::vector<bool> seen(g.size(), false);
    for (auto b : blocked) seen[b] = true;
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < g.size(); ++v) {
            if (v == u || !(g.has_directed(u, v) || g.has_undirected(u, v))) continue;
            if (v == to) return true;
            if (!seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return false;
}

inline std::vector<std::size_t> subset_of(const std::vector<std::size_t>& items, std::uint64_t mask) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < items.size(); ++k)
        if (mask & (std::uint64_t{1} << k)) out.push_back(items[k]);
    return out;
}

inline MixedGraph recanonicalize(const MixedGraph& pdag) { return dag_to_cpdag(pdag_to_dag_or_fallback(pdag)); }

struct Move {
    std::size_t x = 0, y = 0;
    std::vector<std::size_t> set;
    double delta = 0.0;
};

inline constexpr std::size_t kMaxSubsetBits = 20;

inline std::optional<Move> best_insert(const MixedGraph& g, const BicScorer& scorer, const GesOptions& opt) {
    std::optional<Move> best;
    const std::size_t d = g.size();
    for (std::size_t x = 0; x < d; ++x) {
        if (g.degree(x) >= opt.max_degree) continue;
        const auto adj_x = g.adjacents(x);
        for (std::size_t y = 0; y < d; ++y) {
            if (x == y || g.adjacent(x, y) || g.degree(y) >= opt.max_degree) continue;
            const auto nb_y = g.neighbors(y);
            const auto na = intersect(nb_y, adj_x);
            std::vector<std::size_t> t0;
            for (auto t : nb_y)
                if (t != x && !std::binary_search(adj_x.begin(), adj_x.end(), t)) t0.push_back(t);
            if (t0.size() > kMaxSubsetBits) t0.resize(kMaxSubsetBits);
            const auto pa_y = g.directed_parents(y);
            std::vector<std::uint64_t> non_cliques;
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << t0.size()); ++mask) {
                // Supersets of a failed clique test fail as well.
                if (std::any_of(non_cliques.begin(), non_cliques.end(), [&](std::uint64_t m) { return (mask & m) == m; }))
                    continue;
                const auto t = subset_of(t0, mask);
                const auto na_t = unite(na, t);
                const auto base = unite(na_t, pa_y);
                if (base.size() + 1 > opt.max_degree) continue;
                if (!is_clique(g, na_t)) {
                    non_cliques.push_back(mask);
                    continue;
                }
                if (semi_directed_path_avoiding(g, y, x, na_t)) continue;
                const double with = scorer.local_score(y, unite(base, {x}));
                const double without = scorer.local_score(y, base);
                const double delta = with - without;
                if (!std::isfinite(delta)) continue;
                if (!best || delta > best->delta) best = Move{x, y, t, delta};
            }
        }
    }
    return best;
}

inline std::optional<Move> best_delete(const MixedGraph& g, const BicScorer& scorer) {
    std::optional<Move> best;
    const std::size_t d = g.size();
    for (std::size_t x = 0; x < d; ++x) {
        const auto adj_x = g.adjacents(x);
        for (std::size_t y = 0; y < d; ++y) {
            if (x == y || !(g.has_directed(x, y) || g.has_undirected(x, y))) continue;
            auto na = intersect(g.neighbors(y), adj_x);
            if (na.size() > kMaxSubsetBits) na.resize(kMaxSubsetBits);
            const auto pa_y = g.directed_parents(y);
            std::vector<std::size_t> pa_without_x;
            for (auto p : pa_y)
                if (p != x) pa_without_x.push_back(p);
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << na.size()); ++mask) {
                const auto h = subset_of(na, mask);
                std::vector<std::size_t> rest;
                std::set_difference(na.begin(), na.end(), h.begin(), h.end(), std::back_inserter(rest));
                if (!is_clique(g, rest)) continue;
                const auto base = unite(rest, pa_without_x);
                const double without = scorer.local_score(y, base);
                const double with = scorer.local_score(y, unite(base, {x}));
                double delta = without - with;
                if (std::isinf(with) && with < 0 && std::isfinite(without)) delta = std::numeric_limits<double>::max();
                if (std::isnan(delta) || (std::isinf(without) && without < 0)) continue;
                if (!best || delta > best->delta) best = Move{x, y, h, delta};
            }
        }
    }
    return best;
}

}  // namespace detail

/// Two-phase greedy equivalence search over CPDAGs with the linear-Gaussian BIC score.
inline GesTrace ges_search_traced(const TimeSeriesMatrix& data, const GesOptions& opt = {}) {
    if (data.cols() < 2) throw ArgumentError("ges_search needs at least two variables");
    if (opt.max_degree < 1) throw ArgumentError("max_degree must be at least 1");
    BicScorer scorer(data, opt.penalty_discount);
    GesTrace trace{MixedGraph(data.names()), {}, {}};
    MixedGraph& g = trace.cpdag;

    while (auto move = detail::best_insert(g, scorer, opt)) {
        if (!(move->delta > 0.0)) break;
        g.add_directed(move->x, move->y);
        for (auto t : move->set) g.orient(t, move->y);
        g = detail::recanonicalize(g);
        trace.forward_scores.push_back(total_score(g, scorer));
    }
    while (auto move = detail::best_delete(g, scorer)) {
        if (!(move->delta > 0.0)) break;
        g.remove_edge(move->x, move->y);
        for (auto h : move->set) {
            if (g.has_undirected(move->y, h)) g.orient(move->y, h);
            if (g.has_undirected(move->x, h)) g.orient(move->x, h);
        }
        g = detail::recanonicalize(g);
        trace.backward_scores.push_back(total_score(g, scorer));
    }
    return trace;
}

inline MixedGraph ges_search(const TimeSeriesMatrix& data, const GesOptions& opt = {}) {
    return ges_search_traced(data, opt).cpdag;
}

}  // namespace causalad::discovery
