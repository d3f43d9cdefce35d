#pragma once

#include <string>

#include "causalad/discovery/extension.hpp"
#include "causalad/discovery/ges.hpp"
#include "causalad/discovery/lag.hpp"
#include "causalad/discovery/pc.hpp"
#include "causalad/graph.hpp"

namespace causalad::discovery {

enum class Algorithm { pc, ges };

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "pc") return Algorithm::pc;
    if (s == "ges" || s == "fges") return Algorithm::ges;
    throw ConfigError("unknown discovery algorithm '" + std::string(s) + "'");
}

inline std::string to_string(Algorithm a) { return a == Algorithm::pc ? "pc" : "ges"; }

struct DiscoveryOptions {
    Algorithm algorithm = Algorithm::ges;
    double alpha = 0.05;
    std::size_t max_degree = 5;
    double penalty_discount = 20.0;
    int max_lag = 0;
};

/// Runs the configured search and returns the CPDAG over the base variables.
inline MixedGraph discover_cpdag(const TimeSeriesMatrix& data, const DiscoveryOptions& opt) {
    const auto ex = lag_expand(data, opt.max_lag);
    MixedGraph g;
    if (opt.algorithm == Algorithm::pc) {
        PcOptions pc{opt.alpha, opt.max_degree, opt.max_lag > 0 ? ex.knowledge() : Knowledge{}};
        g = pc_search(ex.data, pc);
    } else {
        g = ges_search(ex.data, GesOptions{opt.max_degree, opt.penalty_discount});
        if (opt.max_lag > 0) impose_time_order(g, ex.knowledge());
    }
    return collapse_lagged_graph(g, ex);
}

/// Discovery followed by extension to a DAG.
inline Dag discover(const TimeSeriesMatrix& data, const DiscoveryOptions& opt) {
    return pdag_to_dag_or_fallback(discover_cpdag(data, opt));
}

}  // namespace causalad::discovery
