#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "causalad/config.hpp"
#include "causalad/error.hpp"
#include "causalad/graph.hpp"
#include "causalad/random.hpp"
#include "causalad/stats.hpp"
#include "causalad/timeseries.hpp"

namespace causalad::sim {

enum class Relationship { linear, nonlinear };
enum class AnomalyType { measurement, intervention, effect };
enum class SignalType { harmonic, pseudo_periodic, autoregressive };

inline std::string to_string(Relationship r) { return r == Relationship::linear ? "linear" : "nonlinear"; }

inline std::string to_string(AnomalyType a) {
    switch (a) {
        case AnomalyType::measurement: return "measurement";
        case AnomalyType::intervention: return "intervention";
        case AnomalyType::effect: return "effect";
    }
    return "?";
}

inline std::string to_string(SignalType s) {
    switch (s) {
        case SignalType::harmonic: return "harmonic";
        case SignalType::pseudo_periodic: return "pseudo_periodic";
        case SignalType::autoregressive: return "autoregressive";
    }
    return "?";
}

inline Relationship parse_relationship(std::string_view s) {
    if (s == "linear") return Relationship::linear;
    if (s == "nonlinear") return Relationship::nonlinear;
    throw ConfigError("unknown relationship '" + std::string(s) + "'");
}

inline AnomalyType parse_anomaly_type(std::string_view s) {
    for (auto a : {AnomalyType::measurement, AnomalyType::intervention, AnomalyType::effect})
        if (to_string(a) == s) return a;
    throw ConfigError("unknown anomaly type '" + std::string(s) + "'");
}

struct SimulationSpec {
    std::size_t n = 15;
    double p = 0.1;
    std::size_t length = 20000;
    Relationship relationship = Relationship::linear;
    AnomalyType anomaly = AnomalyType::measurement;
    double anomaly_fraction = 0.10;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 2) throw ConfigError("simulation needs at least 2 variables");
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("edge probability must lie in (0, 1]");
        if (!(anomaly_fraction > 0.0 && anomaly_fraction < 0.5)) throw ConfigError("anomaly fraction must lie in (0, 0.5)");
        if (length < 100) throw ConfigError("simulation length must be at least 100");
    }
};

// ---------------------------------------------------------------------------
// Graph

inline std::vector<std::string> variable_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
    return names;
}

/// Erdos-Renyi skeleton, each pair oriented along a random permutation of the nodes.
inline Dag random_dag(std::size_t n, double p, Rng& rng) {
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::shuffle(rank.begin(), rank.end(), rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MixedGraph g(variable_names(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (u(rng) < p) {
                if (rank[a] < rank[b])
                    g.add_directed(a, b);
                else
                    g.add_directed(b, a);
            }
    return Dag(std::move(g));
}

inline Dag random_dag(std::size_t n, double p, std::uint64_t seed) {
    Rng rng(seed);
    return random_dag(n, p, rng);
}

// ---------------------------------------------------------------------------
// Root signals

inline constexpr double kStopTime = 100.0;

struct SignalParams {
    SignalType type = SignalType::harmonic;
    double frequency = 0.0;
    double noise_sd = 0.0;      // harmonic: additive Gaussian noise
    double amplitude_sd = 0.0;  // pseudo-periodic: per-sample amplitude jitter
    double ar_coefficient = 0.0;
    double ar_sd = 0.0;
    double amplitude = 1.0;
};

inline SignalParams draw_signal_params(SignalType type, Rng& rng) {
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    SignalParams p;
    p.type = type;
    switch (type) {
        case SignalType::harmonic:
            p.frequency = u(0.1, 1.0);
            p.noise_sd = u(0.1, 0.3);
            break;
        case SignalType::pseudo_periodic:
            p.frequency = u(1.0, 6.0);
            p.amplitude_sd = 0.1;
            break;
        case SignalType::autoregressive:
            p.ar_coefficient = u(0.3, 1.0);
            p.ar_sd = u(0.01, 0.1);
            break;
    }
    return p;
}

/// Samples the signal on an even grid of `length` points over [0, kStopTime].
inline std::vector<double> generate_signal(const SignalParams& p, std::size_t length, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(length);
    const double dt = length > 1 ? kStopTime / static_cast<double>(length - 1) : 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < length; ++k) {
        const double t = dt * static_cast<double>(k);
        const double phase = 2.0 * std::numbers::pi * p.frequency * t;
        switch (p.type) {
            case SignalType::harmonic: x[k] = p.amplitude * std::sin(phase) + p.noise_sd * normal(rng); break;
            case SignalType::pseudo_periodic:
                x[k] = (p.amplitude + p.amplitude_sd * normal(rng)) * std::sin(phase);
                break;
            case SignalType::autoregressive:
                prev = p.ar_coefficient * prev + p.ar_sd * normal(rng);
                x[k] = prev;
                break;
        }
    }
    return x;
}

inline std::vector<double> gen_root_signal(SignalType type, std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    const auto p = draw_signal_params(type, rng);
    return generate_signal(p, length, rng);
}

// ---------------------------------------------------------------------------
// Structural equations

struct Sem {
    Dag graph;
    Relationship relationship = Relationship::linear;
    Eigen::MatrixXd weights;  // weights(j, i) for the edge j -> i
    Eigen::MatrixXd noise;    // T x d additive noise, zero for roots
    std::vector<SignalParams> signals;  // meaningful for roots only
    double weight_low = 0.5, weight_high = 2.0, noise_bound = 0.1;

    /// Recomputes x_i(t) from its parents for every non-root i in `targets` over rows [begin, end).
    void evaluate(Eigen::MatrixXd& x, std::size_t begin, std::size_t end, const std::vector<bool>& targets) const {
        for (auto i : graph.topological_order()) {
            if (!targets[i] || !graph.has_parents(i)) continue;
            const auto parents = graph.parents(i);
            const auto ci = static_cast<Eigen::Index>(i);
            for (std::size_t t = begin; t < end; ++t) {
                const auto r = static_cast<Eigen::Index>(t);
                double v = noise(r, ci);
                for (const auto& p : parents) {
                    const double xp = x(r, static_cast<Eigen::Index>(p.index));
                    v += weights(static_cast<Eigen::Index>(p.index), ci) *
                         (relationship == Relationship::linear ? xp : std::tanh(xp));
                }
                x(r, ci) = v;
            }
        }
    }
};

/// Draws weights and noise, then evaluates every non-root from its parents.
inline Eigen::MatrixXd apply_sem(Sem& sem, const std::vector<std::vector<double>>& roots, Rng& rng) {
    const auto d = sem.graph.size();
    if (roots.size() != d) throw ArgumentError("one root signal slot per variable is required");
    std::size_t length = 0;
    for (std::size_t i = 0; i < d; ++i)
        if (!sem.graph.has_parents(i)) {
            if (roots[i].empty()) throw ArgumentError("root '" + sem.graph.names()[i] + "' has no signal");
            length = roots[i].size();
        }
    if (length == 0) throw ArgumentError("no root signals");
    std::uniform_real_distribution<double> w(sem.weight_low, sem.weight_high);
    std::uniform_real_distribution<double> e(-sem.noise_bound, sem.noise_bound);
    sem.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (const auto& p : sem.graph.parents(i)) sem.weights(static_cast<Eigen::Index>(p.index), static_cast<Eigen::Index>(i)) = w(rng);
    sem.noise = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        if (sem.graph.has_parents(i))
            for (std::size_t t = 0; t < length; ++t) sem.noise(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = e(rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        if (!sem.graph.has_parents(i)) {
            if (roots[i].size() != length) throw ArgumentError("root signals differ in length");
            x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(roots[i].data(), static_cast<Eigen::Index>(length));
        }
    sem.evaluate(x, 0, length, std::vector<bool>(d, true));
    return x;
}

// ---------------------------------------------------------------------------
// Anomalies

struct Segment {
    std::size_t begin = 0;  // first row
    std::size_t end = 0;    // one past the last row
    std::set<std::size_t> root_causes;
    double scale = 1.0;
};

struct SimulatedDataset {
    TimeSeriesMatrix data;
    TimeSeriesMatrix clean;
    Dag graph;
    std::vector<int> labels;
    std::vector<Segment> segments;  // sorted by begin, pairwise separated by at least one normal row
    Sem sem;
    SimulationSpec spec;
};

inline std::vector<std::size_t> descendants(const Dag& g, std::size_t i) {
    std::vector<bool> seen(g.size(), false);
    std::vector<std::size_t> stack{i}, out;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto c : g.children(v))
            if (!seen[c]) {
                seen[c] = true;
                out.push_back(c);
                stack.push_back(c);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct InjectionLimits {
    double scale_low = 0.0, scale_high = 3.0;
    std::size_t duration_low = 5, duration_high = 20;
};

/// Edits windows x_i(t : t + dur) = (x_i(t) - median_i) * s + median_i until the labeled fraction is reached.
/// Windows never overlap or touch, so every labeled segment carries exactly one edited variable.
inline void inject_anomalies(SimulatedDataset& ds, AnomalyType type, double fraction, Rng& rng, const InjectionLimits& lim = {}) {
    const auto& g = ds.graph;
    const auto d = g.size();
    const auto t_len = ds.clean.rows();
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < d; ++i)
        if (type != AnomalyType::effect || g.children(i).empty()) eligible.push_back(i);
    if (eligible.empty()) throw GenerationError("no variable without causal children for effect anomalies");
    if (t_len < lim.duration_high + 2) throw GenerationError("series too short for anomaly windows");

    std::vector<double> median(d);
    for (std::size_t i = 0; i < d; ++i) median[i] = stats::median(ds.clean.column(i));

    Eigen::MatrixXd x = ds.clean.values();
    std::vector<int> labels(t_len, 0);
    std::vector<bool> blocked(t_len, false);  // labeled rows and their immediate neighbours
    const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(t_len)));
    std::size_t labeled = 0, attempts = 0;
    std::uniform_int_distribution<std::size_t> pick_var(0, eligible.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_dur(lim.duration_low, lim.duration_high);
    std::uniform_real_distribution<double> pick_scale(lim.scale_low, lim.scale_high);
    std::vector<Segment> segments;

    while (labeled < target) {
        if (++attempts > 1000000) throw GenerationError("could not place enough non-overlapping anomaly windows");
        const auto i = eligible[pick_var(rng)];
        const auto dur = pick_dur(rng);
        const auto s = pick_scale(rng);
        const auto t0 = std::uniform_int_distribution<std::size_t>(0, t_len - dur)(rng);
        bool clash = false;
        for (std::size_t t = t0; t < t0 + dur && !clash; ++t) clash = blocked[t];
        if (clash) continue;

        const auto ci = static_cast<Eigen::Index>(i);
        for (std::size_t t = t0; t < t0 + dur; ++t) {
            const auto r = static_cast<Eigen::Index>(t);
            x(r, ci) = (ds.clean(t, i) - median[i]) * s + median[i];
            labels[t] = 1;
        }
        if (type == AnomalyType::intervention) {
            std::vector<bool> targets(d, false);
            for (auto c : descendants(g, i)) targets[c] = true;
            ds.sem.evaluate(x, t0, t0 + dur, targets);
        }
        for (std::size_t t = t0 == 0 ? 0 : t0 - 1; t < std::min(t_len, t0 + dur + 1); ++t) blocked[t] = true;
        segments.push_back({t0, t0 + dur, {i}, s});
        labeled += dur;
    }
    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) { return a.begin < b.begin; });
    ds.data = TimeSeriesMatrix(std::move(x), ds.clean.names(), ds.clean.start_index());
    ds.labels = std::move(labels);
    ds.segments = std::move(segments);
}

/// Full generator: graph, root signals, structural equations, anomalies. Each stage draws from its own seed.
inline SimulatedDataset simulate(const SimulationSpec& spec) {
    spec.validate();
    SimulatedDataset ds;
    ds.spec = spec;
    ds.graph = random_dag(spec.n, spec.p, derive_seed(spec.seed, "sim:graph"));

    Rng signal_rng(derive_seed(spec.seed, "sim:signals"));
    std::vector<std::vector<double>> roots(spec.n);
    ds.sem.graph = ds.graph;
    ds.sem.relationship = spec.relationship;
    ds.sem.signals.resize(spec.n);
    std::uniform_int_distribution<int> pick_type(0, 2);
    for (std::size_t i = 0; i < spec.n; ++i) {
        if (ds.graph.has_parents(i)) continue;
        const auto type = static_cast<SignalType>(pick_type(signal_rng));
        ds.sem.signals[i] = draw_signal_params(type, signal_rng);
        roots[i] = generate_signal(ds.sem.signals[i], spec.length, signal_rng);
    }
    Rng sem_rng(derive_seed(spec.seed, "sim:sem"));
    auto clean = apply_sem(ds.sem, roots, sem_rng);
    ds.clean = TimeSeriesMatrix(std::move(clean), ds.graph.names());
    Rng anomaly_rng(derive_seed(spec.seed, "sim:anomalies"));
    inject_anomalies(ds, spec.anomaly, spec.anomaly_fraction, anomaly_rng);
    return ds;
}

// ---------------------------------------------------------------------------
// Spec files and outputs

inline SimulationSpec parse_simulation_spec(const nlohmann::json& j) {
    SimulationSpec s;
    detail::StrictObject o(j, "");
    o.read("n", s.n);
    o.read("p", s.p);
    o.read("length", s.length);
    o.read_as("relationship", s.relationship, [](const std::string& v) { return parse_relationship(v); });
    o.read_as("anomaly", s.anomaly, [](const std::string& v) { return parse_anomaly_type(v); });
    o.read("anomaly_fraction", s.anomaly_fraction);
    o.read("seed", s.seed);
    o.finish();
    s.validate();
    return s;
}

inline nlohmann::json simulation_spec_to_json(const SimulationSpec& s) {
    return {{"n", s.n},
            {"p", s.p},
            {"length", s.length},
            {"relationship", to_string(s.relationship)},
            {"anomaly", to_string(s.anomaly)},
            {"anomaly_fraction", s.anomaly_fraction},
            {"seed", s.seed}};
}

/// timestep,label,root_causes with root causes joined by ';'.
inline void write_labels_csv(std::ostream& out, const SimulatedDataset& ds) {
    std::vector<const Segment*> at(ds.labels.size(), nullptr);
    for (const auto& s : ds.segments)
        for (auto t = s.begin; t < s.end; ++t) at[t] = &s;
    out << "timestep,label,root_causes\n";
    for (std::size_t t = 0; t < ds.labels.size(); ++t) {
        out << ds.data.start_index() + static_cast<std::int64_t>(t) << ',' << ds.labels[t] << ',';
        if (at[t]) {
            bool first = true;
            for (auto v : at[t]->root_causes) {
                out << (first ? "" : ";") << ds.graph.names()[v];
                first = false;
            }
        }
        out << '\n';
    }
}

}  // namespace causalad::sim
