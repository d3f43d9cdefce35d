#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "causalad/discovery/meek.hpp"
#include "causalad/error.hpp"
#include "causalad/graph.hpp"
#include "causalad/log.hpp"

namespace causalad::discovery {

/// Dor-Tarsi consistent extension of a PDAG. Repeatedly removes a sink whose undirected
/// neighbours are adjacent to all of its other adjacents, orienting those edges into it.
/// Among eligible nodes the highest index is taken, so a lone edge a - b becomes a -> b.
inline Dag pdag_to_dag(const MixedGraph& pdag) {
    const std::size_t n = pdag.size();
    MixedGraph out = pdag;
    std::vector<bool> alive(n, true);
    for (std::size_t removed = 0; removed < n; ++removed) {
        std::optional<std::size_t> pick;
        for (std::size_t xi = n; xi-- > 0 && !pick;) {
            if (!alive[xi]) continue;
            bool sink = true;
            for (std::size_t y = 0; y < n && sink; ++y)
                if (alive[y] && pdag.has_directed(xi, y)) sink = false;
            if (!sink) continue;
            bool eligible = true;
            for (std::size_t y = 0; y < n && eligible; ++y) {
                if (!alive[y] || !pdag.has_undirected(xi, y)) continue;
                for (std::size_t z = 0; z < n && eligible; ++z)
                    if (z != y && z != xi && alive[z] && pdag.adjacent(xi, z) && !pdag.adjacent(y, z)) eligible = false;
            }
            if (eligible) pick = xi;
        }
        if (!pick) throw ExtensionError("PDAG admits no consistent extension");
        for (std::size_t y = 0; y < n; ++y)
            if (alive[y] && pdag.has_undirected(*pick, y)) out.orient(y, *pick);
        alive[*pick] = false;
    }
    return Dag(std::move(out));
}

/// Orients every contemporaneous edge along a greedy order: ready nodes (no remaining directed
/// in-edges) by index, otherwise the lowest remaining index. Always acyclic; the skeleton is kept.
inline Dag orient_by_index_order(const MixedGraph& g) {
    const std::size_t n = g.size();
    std::vector<bool> placed(n, false);
    std::vector<std::size_t> position(n, 0);
    for (std::size_t step = 0; step < n; ++step) {
        std::optional<std::size_t> pick;
        for (std::size_t i = 0; i < n && !pick; ++i) {
            if (placed[i]) continue;
            bool ready = true;
            for (std::size_t j = 0; j < n && ready; ++j)
                if (!placed[j] && g.has_directed(j, i)) ready = false;
            if (ready) pick = i;
        }
        if (!pick)
            for (std::size_t i = 0; i < n && !pick; ++i)
                if (!placed[i]) pick = i;
        placed[*pick] = true;
        position[*pick] = step;
    }
    MixedGraph out = g;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (g.adjacent(i, j)) {
                if (position[i] < position[j])
                    out.orient(i, j);
                else
                    out.orient(j, i);
            }
    return Dag(std::move(out));
}

/// pdag_to_dag, falling back to orient_by_index_order (with a warning) for inextendable input.
inline Dag pdag_to_dag_or_fallback(const MixedGraph& pdag) {
    try {
        return pdag_to_dag(pdag);
    } catch (const Error& e) {
        warn(std::string(e.what()) + "; orienting remaining edges by variable index");
        return orient_by_index_order(pdag);
    }
}

/// Contemporaneous v-structures a -> c <- b with a, b non-adjacent, as (a, c, b) with a < b.
inline std::vector<std::array<std::size_t, 3>> v_structures(const MixedGraph& g) {
    std::vector<std::array<std::size_t, 3>> out;
    const std::size_t n = g.size();
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (a != c && b != c && g.has_directed(a, c) && g.has_directed(b, c) && !g.adjacent(a, b))
                    out.push_back({a, c, b});
    return out;
}

/// CPDAG of the Markov equivalence class of dag: v-structures kept, closure under Meek rules.
/// Lagged edges are compelled by time order and stay directed.
inline MixedGraph dag_to_cpdag(const Dag& dag) {
    const MixedGraph& g = dag.graph();
    MixedGraph out(g.names());
    for (const auto& e : g.directed_edges()) {
        if (e.lag > 0)
            out.add_directed(e.from, e.to, e.lag);
        else
            out.add_undirected(e.from, e.to);
    }
    for (const auto& v : v_structures(g)) {
        out.orient(v[0], v[1]);
        out.orient(v[2], v[1]);
    }
    apply_meek_rules(out);
    return out;
}

}  // namespace causalad::discovery
