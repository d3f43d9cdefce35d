#pragma once

#include <functional>

#include "causalad/graph.hpp"

namespace causalad::discovery {

/// Returns false when orienting from -> to is forbidden by background knowledge.
using OrientationFilter = std::function<bool(std::size_t from, std::size_t to)>;

/// Applies Meek's orientation rules to the contemporaneous part of g until closure.
inline void apply_meek_rules(MixedGraph& g, bool rule4 = true, const OrientationFilter& allowed = {}) {
    const std::size_t n = g.size();
    auto ok = [&](std::size_t a, std::size_t b) { return !allowed || allowed(a, b); };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (a == b || !g.has_undirected(a, b) || !ok(a, b)) continue;
                bool orient = false;
                // R1: c -> a, c not adjacent to b  =>  a -> b
                for (std::size_t c = 0; c < n && !orient; ++c)
                    if (c != a && c != b && g.has_directed(c, a) && !g.adjacent(c, b)) orient = true;
                // R2: a -> c -> b  =>  a -> b
                for (std::size_t c = 0; c < n && !orient; ++c)
                    if (c != a && c != b && g.has_directed(a, c) && g.has_directed(c, b)) orient = true;
                // R3: a - c -> b, a - d -> b, c and d not adjacent  =>  a -> b
                for (std::size_t c = 0; c < n && !orient; ++c) {
                    if (c == a || c == b || !g.has_undirected(a, c) || !g.has_directed(c, b)) continue;
                    for (std::size_t d = c + 1; d < n && !orient; ++d)
                        if (d != a && d != b && g.has_undirected(a, d) && g.has_directed(d, b) && !g.adjacent(c, d))
                            orient = true;
                }
                // R4: a - c -> d -> b, c not adjacent to b, a adjacent to d  =>  a -> b
                for (std::size_t c = 0; c < n && !orient && rule4; ++c) {
                    if (c == a || c == b || !g.has_undirected(a, c) || g.adjacent(c, b)) continue;
                    for (std::size_t d = 0; d < n && !orient; ++d)
                        if (d != a && d != b && d != c && g.has_directed(c, d) && g.has_directed(d, b) && g.adjacent(a, d))
                            orient = true;
                }
                if (orient) {
                    g.orient(a, b);
                    changed = true;
                }
            }
        }
    }
}

}  // namespace causalad::discovery
