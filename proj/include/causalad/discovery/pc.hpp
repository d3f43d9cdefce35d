#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <vector>

#include "causalad/discovery/fisher_z.hpp"
#include "causalad/discovery/meek.hpp"
#include "causalad/discovery/subsets.hpp"
#include "causalad/graph.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::discovery {

/// Temporal tiers for lag-expanded variables: tier = lag, so a node may only point to nodes
/// whose tier is not larger than its own.
struct Knowledge {
    std::vector<int> tier;

    bool empty() const { return tier.empty(); }
    bool allows(std::size_t from, std::size_t to) const { return tier.empty() || tier[from] >= tier[to]; }
    bool crosses_tiers(std::size_t a, std::size_t b) const { return !tier.empty() && tier[a] != tier[b]; }
};

struct PcOptions {
    double alpha = 0.05;
    std::size_t max_degree = 5;
    Knowledge knowledge;
};

namespace detail {

class CiOracle {
public:
    CiOracle(const CorrelationMatrix& corr, double alpha) : corr_(corr), alpha_(alpha) {}

    /// Independence decision; a singular submatrix counts as dependent.
    bool independent(std::size_t i, std::size_t j, std::vector<std::size_t> given) {
        if (i > j) std::swap(i, j);
        std::sort(given.begin(), given.end());
        auto key = std::make_pair(std::make_pair(i, j), given);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        bool result = false;
        if (corr_.n > given.size() + 3) {
            try {
                result = fisher_z_test(corr_, i, j, given, alpha_).independent;
            } catch (const TestError&) {
                result = false;
            }
        }
        cache_.emplace(std::move(key), result);
        return result;
    }

private:
    const CorrelationMatrix& corr_;
    double alpha_;
    std::map<std::pair<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>, bool> cache_;
};

inline std::vector<std::size_t> without(std::vector<std::size_t> v, std::size_t x) {
    v.erase(std::remove(v.begin(), v.end(), x), v.end());
    return v;
}

}  // namespace detail

/// Stable PC: skeleton search with per-depth adjacency snapshots, majority-rule collider
/// orientation, and Meek closure. Returns a CPDAG.
inline MixedGraph pc_search(const TimeSeriesMatrix& data, const PcOptions& opt = {}) {
    const std::size_t d = data.cols();
    if (d < 2) throw ArgumentError("pc_search needs at least two variables");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    const auto corr = CorrelationMatrix::from(data);
    detail::CiOracle oracle(corr, opt.alpha);

    std::vector<std::vector<bool>> adj(d, std::vector<bool>(d, true));
    for (std::size_t i = 0; i < d; ++i) adj[i][i] = false;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sepset;

    auto adjacents = [&](const std::vector<std::vector<bool>>& a, std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < d; ++j)
            if (a[i][j]) out.push_back(j);
        return out;
    };

    for (std::size_t depth = 0; depth <= opt.max_degree; ++depth) {
        const auto snapshot = adj;
        bool testable = false;
        for (std::size_t x = 0; x < d; ++x) {
            for (std::size_t y = x + 1; y < d; ++y) {
                if (!adj[x][y]) continue;
                for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}}) {
                    if (!adj[x][y]) break;
                    const auto candidates = detail::without(adjacents(snapshot, a), b);
                    if (candidates.size() < depth) continue;
                    testable = true;
                    for_each_subset(candidates, depth, [&](const std::vector<std::size_t>& s) {
                        if (!oracle.independent(x, y, s)) return false;
                        adj[x][y] = adj[y][x] = false;
                        sepset[{x, y}] = s;
                        return true;
                    });
                }
            }
        }
        if (!testable) break;
    }

    MixedGraph g(data.names());
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (adj[i][j]) g.add_undirected(i, j);

    const auto& kn = opt.knowledge;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (g.has_undirected(i, j) && kn.crosses_tiers(i, j)) {
                if (kn.allows(i, j))
                    g.orient(i, j);
                else
                    g.orient(j, i);
            }

    // Majority rule: z is a collider on x - z - y when fewer than half of the separating sets
    // found among subsets of adj(x) and adj(y) contain it; exactly half is ambiguous.
    std::vector<std::array<std::size_t, 3>> colliders;
    for (std::size_t z = 0; z < d; ++z) {
        for (std::size_t x = 0; x < d; ++x) {
            for (std::size_t y = x + 1; y < d; ++y) {
                if (x == z || y == z || !adj[x][z] || !adj[y][z] || adj[x][y]) continue;
                std::size_t with_z = 0, total = 0;
                std::set<std::vector<std::size_t>> seen;
                for (std::size_t side : {x, y}) {
                    const auto candidates = detail::without(adjacents(adj, side), side == x ? y : x);
                    for (std::size_t k = 0; k <= std::min(candidates.size(), opt.max_degree); ++k) {
                        for_each_subset(candidates, k, [&](const std::vector<std::size_t>& s) {
                            if (!seen.insert(s).second) return false;
                            if (oracle.independent(x, y, s)) {
                                ++total;
                                with_z += std::find(s.begin(), s.end(), z) != s.end();
                            }
                            return false;
                        });
                    }
                }
                bool collider = false;
                if (total == 0) {
                    const auto& s = sepset[{x, y}];
                    collider = std::find(s.begin(), s.end(), z) == s.end();
                } else {
                    collider = 2 * with_z < total;
                }
                if (collider) colliders.push_back({x, z, y});
            }
        }
    }
    for (const auto& [x, z, y] : colliders) {
        for (std::size_t tail : {x, y}) {
            if (g.has_undirected(tail, z) && kn.allows(tail, z)) g.orient(tail, z);
        }
    }

    apply_meek_rules(g, true, [&](std::size_t a, std::size_t b) { return kn.allows(a, b); });
    return g;
}

}  // namespace causalad::discovery
