#pragma once

// Independent reference implementations and property checks shared by the unit suite and the
// acceptance runner. Nothing here calls the library routine it is used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "causalad.hpp"

namespace oracle {

using causalad::Dag;
using causalad::MixedGraph;
using causalad::Rng;
using causalad::TimeSeriesMatrix;

struct Check {
    bool pass = true;
    std::string detail;
};

inline std::vector<std::string> names(std::size_t d) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < d; ++i) out.push_back("v" + std::to_string(i));
    return out;
}

/// Random DAG: edge i -> j (i < j in a shuffled order) with probability p.
inline Dag random_dag(std::size_t d, double p, Rng& rng) {
    std::vector<std::size_t> perm(d);
    for (std::size_t i = 0; i < d; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::bernoulli_distribution edge(p);
    MixedGraph g(names(d));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b)
            if (edge(rng)) g.add_directed(perm[a], perm[b]);
    return Dag(std::move(g));
}

/// Linear Gaussian SEM samples over a DAG: x_i = sum w * x_parent + N(0, noise^2).
inline TimeSeriesMatrix linear_sem(const Dag& g, std::size_t n, Rng& rng, double noise = 1.0) {
    const auto d = g.size();
    std::uniform_real_distribution<double> w(0.5, 1.5);
    std::bernoulli_distribution sign(0.5);
    std::normal_distribution<double> e(0.0, noise);
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (const auto& p : g.parents(i))
            weights(static_cast<Eigen::Index>(p.index), static_cast<Eigen::Index>(i)) = (sign(rng) ? 1.0 : -1.0) * w(rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (auto i : g.topological_order()) {
        const auto ci = static_cast<Eigen::Index>(i);
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            double v = e(rng);
            for (const auto& p : g.parents(i)) v += weights(static_cast<Eigen::Index>(p.index), ci) * x(t, static_cast<Eigen::Index>(p.index));
            x(t, ci) = v;
        }
    }
    return TimeSeriesMatrix(std::move(x), g.names());
}

/// Root-cause propagation evaluated by plain memoized recursion over the children lists.
inline std::vector<double> brute_force_rs(const std::vector<double>& s, const Dag& g, double alpha) {
    const auto d = g.size();
    std::map<std::size_t, double> memo;
    std::function<double(std::size_t)> rs = [&](std::size_t i) -> double {
        if (auto it = memo.find(i); it != memo.end()) return it->second;
        std::vector<std::size_t> kids;
        for (std::size_t j = 0; j < d; ++j)
            if (g.graph().has_directed_any_lag(i, j)) kids.push_back(j);
        double v = s[i];
        if (!kids.empty()) {
            double sum = 0.0;
            for (auto j : kids) sum += rs(j);
            v += alpha * sum / static_cast<double>(kids.size());
        }
        memo[i] = v;
        return v;
    };
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = rs(i);
    return out;
}

inline std::set<std::pair<std::size_t, std::size_t>> skeleton(const MixedGraph& g) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = a + 1; b < g.size(); ++b)
            if (g.adjacent(a, b)) out.insert({a, b});
    return out;
}

/// Unshielded colliders a -> c <- b (a < b) whose both arrows are directed in g.
inline std::set<std::array<std::size_t, 3>> colliders(const MixedGraph& g) {
    std::set<std::array<std::size_t, 3>> out;
    const auto d = g.size();
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a + 1; b < d; ++b)
                if (g.has_directed(a, c) && g.has_directed(b, c) && !g.adjacent(a, b)) out.insert({a, c, b});
    return out;
}

inline bool acyclic(const MixedGraph& g) {
    const auto d = g.size();
    std::vector<int> state(d, 0);
    std::function<bool(std::size_t)> visit = [&](std::size_t v) {
        state[v] = 1;
        for (std::size_t w = 0; w < d; ++w) {
            if (!g.has_directed(v, w)) continue;
            if (state[w] == 1) return false;
            if (state[w] == 0 && !visit(w)) return false;
        }
        state[v] = 2;
        return true;
    };
    for (std::size_t v = 0; v < d; ++v)
        if (state[v] == 0 && !visit(v)) return false;
    return true;
}

/// Central-difference relative error on `coords` random coordinates of a flat parameter vector.
inline double max_gradient_error(std::vector<double> params, const std::vector<double>& analytic,
                                 const std::function<double(const std::vector<double>&)>& loss, std::size_t coords, Rng& rng,
                                 double h = 1e-5) {
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    double worst = 0.0;
    for (std::size_t k = 0; k < coords; ++k) {
        const auto i = pick(rng);
        const double keep = params[i];
        params[i] = keep + h;
        const double up = loss(params);
        params[i] = keep - h;
        const double down = loss(params);
        params[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
    }
    return worst;
}

/// Three-variable scenario x -> y -> z with y = 0.5 x + e1 and z = tanh(y^2 - y) + e2. The test half
/// carries a shift on y's mechanism over [begin, end); z is recomputed from the shifted y.
struct ChainScenario {
    TimeSeriesMatrix train;
    TimeSeriesMatrix test;
    Dag graph;
    std::size_t begin = 40;
    std::size_t end = 45;
    double shift = 1.0;
};

inline ChainScenario chain_scenario(std::uint64_t seed, std::size_t train_rows = 2000, std::size_t test_rows = 200) {
    ChainScenario f;
    Rng rng(seed);
    std::normal_distribution<double> x(0.0, 1.0), e(0.0, 0.1);
    auto make = [&](std::size_t n, bool inject) {
        Eigen::MatrixXd v(static_cast<Eigen::Index>(n), 3);
        for (std::size_t t = 0; t < n; ++t) {
            const auto r = static_cast<Eigen::Index>(t);
            v(r, 0) = x(rng);
            v(r, 1) = 0.5 * v(r, 0) + e(rng);
            if (inject && t >= f.begin && t < f.end) v(r, 1) += f.shift;
            v(r, 2) = std::tanh(v(r, 1) * v(r, 1) - v(r, 1)) + e(rng);
        }
        return TimeSeriesMatrix(std::move(v), {"x", "y", "z"});
    };
    f.train = make(train_rows, false);
    f.test = make(test_rows, true);
    f.test = TimeSeriesMatrix(f.test.values(), f.test.names(), static_cast<std::int64_t>(train_rows));
    MixedGraph g({"x", "y", "z"});
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    f.graph = Dag(std::move(g));
    return f;
}

// ---------------------------------------------------------------------------
// Property checks

inline Check fisher_z_calibration(std::size_t trials = 10000, std::size_t n = 500, double alpha = 0.05, std::uint64_t seed = 7) {
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::size_t rejected = 0;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 2);
    const std::vector<std::size_t> none;
    for (std::size_t k = 0; k < trials; ++k) {
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            x(t, 0) = z(rng);
            x(t, 1) = z(rng);
        }
        const TimeSeriesMatrix m(x, {"a", "b"});
        if (!causalad::discovery::fisher_z_test(m, 0, 1, none, alpha).independent) ++rejected;
    }
    const double rate = static_cast<double>(rejected) / static_cast<double>(trials);
    std::ostringstream msg;
    msg << "rejection rate " << rate << " over " << trials << " trials";
    return {std::abs(rate - alpha) <= 0.01, msg.str()};
}

inline Check pdag_extension_consistency(std::size_t graphs = 200, std::uint64_t seed = 11) {
    Rng rng(seed);
    std::size_t bad = 0;
    for (std::size_t k = 0; k < graphs; ++k) {
        const std::size_t d = 5 + k % 6;
        const auto truth = random_dag(d, 0.35, rng);
        const auto data = linear_sem(truth, 1000, rng);
        const auto cpdag = causalad::discovery::ges_search(data, {5, 2.0});
        Dag dag;
        try {
            dag = causalad::discovery::pdag_to_dag(cpdag);
        } catch (const causalad::ExtensionError&) {
            ++bad;
            continue;
        }
        const bool ok = acyclic(dag.graph()) && skeleton(dag.graph()) == skeleton(cpdag) &&
                        colliders(dag.graph()) == colliders(cpdag) && !dag.graph().undirected_edges().size();
        // Every directed edge of the CPDAG keeps its direction.
        bool kept = true;
        for (const auto& e : cpdag.directed_edges()) kept = kept && dag.graph().has_directed(e.from, e.to);
        if (!ok || !kept) ++bad;
    }
    std::ostringstream msg;
    msg << bad << " of " << graphs << " extensions inconsistent";
    return {bad == 0, msg.str()};
}

inline Check propagation_matches_recursion(std::size_t graphs = 100, std::uint64_t seed = 13) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < graphs; ++k) {
        const std::size_t d = 1 + k % 12;
        const auto g = random_dag(d, 0.3, rng);
        std::vector<double> s(d);
        for (auto& v : s) v = u(rng);
        const double alpha = 0.95 * u(rng);
        const auto fast = causalad::propagate(s, g, alpha);
        const auto slow = brute_force_rs(s, g, alpha);
        for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
    }
    std::ostringstream msg;
    msg << "max |RS - recursion| = " << worst;
    return {worst <= 1e-12, msg.str()};
}

inline Check mlp_gradient(std::uint64_t seed = 17) {
    using namespace causalad::models;
    Rng rng(seed);
    Mlp net({3, 10, 20, 10, 1}, rng);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(3, 32);
    Eigen::RowVectorXd y(32);
    for (Eigen::Index j = 0; j < 32; ++j) {
        for (Eigen::Index i = 0; i < 3; ++i) x(i, j) = z(rng);
        y(j) = z(rng);
    }
    auto grads = net.zero_gradients();
    MlpRegressor::loss(net, x, y, &grads);
    const auto analytic = Mlp::flatten(grads);
    auto loss = [&](const std::vector<double>& p) {
        Mlp probe = net;
        probe.unflatten(p);
        return MlpRegressor::loss(probe, x, y);
    };
    const double err = max_gradient_error(net.flatten(), analytic, loss, 10, rng);
    std::ostringstream msg;
    msg << "max relative error " << err;
    return {err < 1e-4, msg.str()};
}

inline Check cvae_gradient(std::uint64_t seed = 19) {
    using namespace causalad::models;
    Rng rng(seed);
    const std::size_t latent = 5, m = 2, b = 16;
    Mlp enc(layer_sizes(1 + m, {10, 20, 10}, 2 * latent), rng);
    Mlp dec(layer_sizes(m + latent, {10, 20, 10}, 1), rng);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::RowVectorXd x(b);
    Eigen::MatrixXd c(m, b), eps(latent, b);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(b); ++j) {
        x(j) = z(rng);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) c(i, j) = z(rng);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(latent); ++i) eps(i, j) = z(rng);
    }
    auto ge = enc.zero_gradients();
    auto gd = dec.zero_gradients();
    Cvae::elbo(enc, dec, latent, x, c, eps, &ge, &gd);
    auto flat_e = Mlp::flatten(ge);
    const auto flat_d = Mlp::flatten(gd);
    std::vector<double> analytic = flat_e;
    analytic.insert(analytic.end(), flat_d.begin(), flat_d.end());
    std::vector<double> params = enc.flatten();
    const auto pd = dec.flatten();
    params.insert(params.end(), pd.begin(), pd.end());
    const auto ne = enc.num_parameters();
    auto loss = [&](const std::vector<double>& p) {
        Mlp e2 = enc, d2 = dec;
        e2.unflatten(std::span<const double>(p.data(), ne));
        d2.unflatten(std::span<const double>(p.data() + ne, p.size() - ne));
        return Cvae::elbo(e2, d2, latent, x, c, eps).loss();
    };
    const double err = max_gradient_error(params, analytic, loss, 10, rng);
    std::ostringstream msg;
    msg << "max relative error " << err;
    return {err < 1e-4, msg.str()};
}

inline Check survival_monotone(std::uint64_t seed = 23) {
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, 0.3);
    std::vector<double> residuals(500);
    for (auto& r : residuals) r = z(rng);
    const auto cal = causalad::models::ResidualCalibration::fit(residuals);
    double prev = 2.0;
    bool ok = cal.survival(0.0) == 1.0;
    for (double v = 0.0; v < 20.0 * cal.sorted_abs.back(); v += cal.sorted_abs.back() / 997.0) {
        const double m = cal.survival(v);
        ok = ok && m <= prev && m >= 0.0 && m <= 1.0;
        prev = m;
    }
    return {ok, ok ? "M nonincreasing in |residual| up to 20x the largest training residual" : "M increased somewhere"};
}

inline Check point_adjust_and_threshold_monotone(std::size_t cases = 500, std::uint64_t seed = 29) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool ok = true;
    for (std::size_t k = 0; k < cases && ok; ++k) {
        const std::size_t n = 20 + k % 80;
        std::vector<int> truth(n), pred(n);
        std::vector<double> scores(n);
        for (std::size_t t = 0; t < n; ++t) {
            truth[t] = u(rng) < 0.3;
            pred[t] = u(rng) < 0.2;
            scores[t] = u(rng);
        }
        const auto adj = causalad::eval::point_adjust(pred, truth);
        for (std::size_t t = 0; t < n; ++t) ok = ok && (pred[t] == 0 || adj[t] == 1);
        ok = ok && causalad::eval::prf(adj, truth).recall >= causalad::eval::prf(pred, truth).recall;
        const double lo = u(rng), hi = lo + (1.0 - lo) * u(rng);
        std::size_t above_lo = 0, above_hi = 0;
        for (double s : scores) {
            above_lo += s > lo;
            above_hi += s > hi;
        }
        ok = ok && above_hi <= above_lo;
        ok = ok && causalad::eval::best_f1_sweep(scores, truth).best.f1 >= causalad::eval::evaluate_threshold(scores, truth, lo).f1;
    }
    return {ok, ok ? "point-adjust never drops a prediction or lowers recall; raising the threshold never adds labels"
                   : "a monotonicity invariant failed"};
}

inline Check simulation_determinism_and_fraction(std::uint64_t seed = 31) {
    using namespace causalad::sim;
    bool ok = true;
    std::ostringstream msg;
    for (auto type : {AnomalyType::measurement, AnomalyType::intervention, AnomalyType::effect}) {
        SimulationSpec spec;
        spec.length = 5000;
        spec.seed = seed;
        spec.anomaly = type;
        const auto a = simulate(spec);
        const auto b = simulate(spec);
        const bool same = a.data.values() == b.data.values() && a.labels == b.labels && a.graph == b.graph;
        const double frac =
            static_cast<double>(std::count(a.labels.begin(), a.labels.end(), 1)) / static_cast<double>(a.labels.size());
        ok = ok && same && std::abs(frac - spec.anomaly_fraction) <= 0.01;
        msg << to_string(type) << ": " << (same ? "bitwise identical" : "DIFFERENT") << ", fraction " << frac << "; ";
    }
    return {ok, msg.str()};
}

}  // namespace oracle
