#include <gtest/gtest.h>

#include <sstream>

#include "causalad.hpp"
#include "support/oracles.hpp"

using namespace causalad;
using namespace causalad::sim;

namespace {

SimulationSpec small(AnomalyType type, std::uint64_t seed, Relationship rel = Relationship::linear) {
    SimulationSpec s;
    s.n = 8;
    s.p = 0.3;
    s.length = 4000;
    s.anomaly = type;
    s.relationship = rel;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(RandomDag, TinyProbabilityStillValid) {
    const auto g = random_dag(15, 1e-9, 1);
    EXPECT_EQ(g.size(), 15u);
    EXPECT_EQ(g.graph().num_edges(), 0u);
    EXPECT_EQ(g.roots().size(), 15u);
}

TEST(RandomDag, CompleteWhenCertain) {
    const auto g = random_dag(15, 1.0, 2);
    EXPECT_EQ(g.graph().num_edges(), 105u);
    EXPECT_TRUE(oracle::acyclic(g.graph()));
}

TEST(RandomDag, MeanEdgeCount) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) total += static_cast<double>(random_dag(15, 0.1, seed).graph().num_edges());
    EXPECT_NEAR(total / 1000.0, 10.5, 1.0);
}

TEST(Signal, NoiselessHarmonicIsExactSine) {
    Rng rng(3);
    SignalParams p;
    p.type = SignalType::harmonic;
    p.frequency = 0.25;
    p.noise_sd = 0.0;
    const auto x = generate_signal(p, 20001, rng);
    double peak = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = kStopTime * static_cast<double>(k) / 20000.0;
        EXPECT_NEAR(x[k], std::sin(2.0 * std::numbers::pi * 0.25 * t), 1e-9);
        peak = std::max(peak, std::abs(x[k]));
    }
    EXPECT_NEAR(peak, 1.0, 1e-6);
}

TEST(Signal, ArVarianceMatchesStationaryValue) {
    Rng rng(4);
    SignalParams p;
    p.type = SignalType::autoregressive;
    p.ar_coefficient = 0.3;
    p.ar_sd = 0.1;
    const auto x = generate_signal(p, 20000, rng);
    const double expected = 0.01 / (1.0 - 0.09);
    const double var = std::pow(stats::stdev(x), 2);
    EXPECT_NEAR(var, expected, 0.1 * expected);
}

TEST(Signal, DrawsLandInRanges) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const auto h = draw_signal_params(SignalType::harmonic, rng);
        EXPECT_GE(h.frequency, 0.1);
        EXPECT_LE(h.frequency, 1.0);
        EXPECT_GE(h.noise_sd, 0.1);
        EXPECT_LE(h.noise_sd, 0.3);
        const auto pp = draw_signal_params(SignalType::pseudo_periodic, rng);
        EXPECT_GE(pp.frequency, 1.0);
        EXPECT_LE(pp.frequency, 6.0);
        EXPECT_EQ(pp.amplitude_sd, 0.1);
        const auto ar = draw_signal_params(SignalType::autoregressive, rng);
        EXPECT_GE(ar.ar_coefficient, 0.3);
        EXPECT_LE(ar.ar_coefficient, 1.0);
        EXPECT_GE(ar.ar_sd, 0.01);
        EXPECT_LE(ar.ar_sd, 0.1);
    }
}

TEST(Sem, UnitWeightNoiselessChainCopiesParent) {
    MixedGraph g({"x", "y"});
    g.add_directed(0, 1);
    Sem sem;
    sem.graph = Dag(g);
    sem.weight_low = sem.weight_high = 1.0;
    sem.noise_bound = 0.0;
    Rng rng(5);
    const std::vector<std::vector<double>> roots{{0.5, -1.0, 2.0, 3.5}, {}};
    const auto x = apply_sem(sem, roots, rng);
    EXPECT_TRUE(x.col(0) == x.col(1));
}

TEST(Sem, NonlinearValuesBounded) {
    const auto ds = simulate(small(AnomalyType::measurement, 6, Relationship::nonlinear));
    for (std::size_t i = 0; i < ds.graph.size(); ++i) {
        if (!ds.graph.has_parents(i)) continue;
        double bound = ds.sem.noise_bound;
        for (const auto& p : ds.graph.parents(i)) bound += std::abs(ds.sem.weights(static_cast<Eigen::Index>(p.index), static_cast<Eigen::Index>(i)));
        EXPECT_LE(ds.clean.values().col(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff(), bound);
    }
}

TEST(Sem, WeightsMatchGraphExactly) {
    const auto ds = simulate(small(AnomalyType::measurement, 7));
    for (std::size_t a = 0; a < ds.graph.size(); ++a)
        for (std::size_t b = 0; b < ds.graph.size(); ++b) {
            const double w = ds.sem.weights(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            EXPECT_EQ(w != 0.0, ds.graph.graph().has_directed(a, b));
            if (w != 0.0) {
                EXPECT_GE(w, 0.5);
                EXPECT_LE(w, 2.0);
            }
        }
    EXPECT_TRUE(oracle::acyclic(ds.graph.graph()));
}

TEST(Simulate, DeterministicAndFractionWithinTolerance) {
    const auto c = oracle::simulation_determinism_and_fraction();
    EXPECT_TRUE(c.pass) << c.detail;
}

TEST(Simulate, DefaultShape) {
    const auto ds = simulate({});
    EXPECT_EQ(ds.data.rows(), 20000u);
    EXPECT_EQ(ds.data.cols(), 15u);
    EXPECT_EQ(ds.labels.size(), 20000u);
}

TEST(Inject, SegmentsAlignWithLabelsAndCarryOneCause) {
    for (auto type : {AnomalyType::measurement, AnomalyType::intervention, AnomalyType::effect}) {
        const auto ds = simulate(small(type, 8));
        const auto runs = eval::segments(ds.labels);
        ASSERT_EQ(runs.size(), ds.segments.size());
        for (std::size_t k = 0; k < runs.size(); ++k) {
            EXPECT_EQ(runs[k].begin, ds.segments[k].begin);
            EXPECT_EQ(runs[k].end, ds.segments[k].end);
            EXPECT_EQ(ds.segments[k].root_causes.size(), 1u);
            EXPECT_GE(runs[k].length(), 5u);
            EXPECT_LE(runs[k].length(), 20u);
            if (type == AnomalyType::effect) EXPECT_TRUE(ds.graph.children(*ds.segments[k].root_causes.begin()).empty());
        }
    }
}

TEST(Inject, MeasurementFormula) {
    const auto ds = simulate(small(AnomalyType::measurement, 9));
    for (const auto& s : ds.segments) {
        const auto i = *s.root_causes.begin();
        const double med = stats::median(ds.clean.column(i));
        for (auto t = s.begin; t < s.end; ++t) EXPECT_NEAR(ds.data(t, i), (ds.clean(t, i) - med) * s.scale + med, 1e-12);
    }
}

TEST(Inject, ScaleEdgeCases) {
    auto ds = simulate(small(AnomalyType::measurement, 10));
    for (double scale : {0.0, 1.0}) {
        Rng rng(11);
        InjectionLimits lim;
        lim.scale_low = lim.scale_high = scale;
        inject_anomalies(ds, AnomalyType::measurement, 0.1, rng, lim);
        for (const auto& s : ds.segments) {
            const auto i = *s.root_causes.begin();
            const double med = stats::median(ds.clean.column(i));
            for (auto t = s.begin; t < s.end; ++t) {
                EXPECT_EQ(ds.labels[t], 1);
                EXPECT_NEAR(ds.data(t, i), scale == 0.0 ? med : ds.clean(t, i), 1e-12);
            }
        }
    }
}

TEST(Inject, InterventionPropagatesOnlyToDescendants) {
    const auto ds = simulate(small(AnomalyType::intervention, 12));
    std::vector<bool> touched_anywhere(ds.graph.size(), false);
    for (const auto& s : ds.segments) {
        const auto i = *s.root_causes.begin();
        std::vector<bool> allowed(ds.graph.size(), false);
        allowed[i] = true;
        for (auto c : descendants(ds.graph, i)) allowed[c] = true;
        for (auto t = s.begin; t < s.end; ++t)
            for (std::size_t v = 0; v < ds.graph.size(); ++v)
                if (!allowed[v]) EXPECT_EQ(ds.data(t, v), ds.clean(t, v));
    }
    // Rows outside every window are untouched.
    for (std::size_t t = 0; t < ds.labels.size(); ++t)
        if (!ds.labels[t])
            for (std::size_t v = 0; v < ds.graph.size(); ++v) ASSERT_EQ(ds.data(t, v), ds.clean(t, v));
}

TEST(Inject, InterventionOnChainMovesChild) {
    MixedGraph g({"x", "y"});
    g.add_directed(0, 1);
    SimulatedDataset ds;
    ds.graph = Dag(g);
    ds.sem.graph = ds.graph;
    Rng rng(13);
    const std::vector<std::vector<double>> roots{gen_root_signal(SignalType::harmonic, 500, 14), {}};
    ds.clean = TimeSeriesMatrix(apply_sem(ds.sem, roots, rng), {"x", "y"});
    InjectionLimits lim;
    lim.scale_low = lim.scale_high = 2.5;
    Rng pick(15);
    inject_anomalies(ds, AnomalyType::intervention, 0.3, pick, lim);
    std::size_t on_x = 0;
    for (const auto& s : ds.segments) {
        if (*s.root_causes.begin() != 0) continue;
        ++on_x;
        bool moved = false;
        for (auto t = s.begin; t < s.end; ++t) moved = moved || ds.data(t, 1) != ds.clean(t, 1);
        EXPECT_TRUE(moved);
    }
    EXPECT_GT(on_x, 0u);
}

TEST(Inject, EffectTargetsOnlySinks) {
    MixedGraph g({"a", "b", "c"});
    g.add_directed(0, 1);
    g.add_directed(0, 2);
    SimulatedDataset ds;
    ds.graph = Dag(g);
    ds.clean = TimeSeriesMatrix(Eigen::MatrixXd::Random(400, 3), {"a", "b", "c"});
    Rng rng(16);
    inject_anomalies(ds, AnomalyType::effect, 0.2, rng);
    for (const auto& s : ds.segments) EXPECT_NE(*s.root_causes.begin(), 0u);
    for (std::size_t t = 0; t < 400; ++t) EXPECT_EQ(ds.data(t, 0), ds.clean(t, 0));
}

TEST(Inject, TooShortSeriesRejected) {
    SimulatedDataset ds;
    ds.graph = Dag(MixedGraph({"a", "b"}));
    ds.clean = TimeSeriesMatrix(Eigen::MatrixXd::Zero(15, 2), {"a", "b"});
    Rng rng(17);
    EXPECT_THROW(inject_anomalies(ds, AnomalyType::measurement, 0.1, rng), GenerationError);
}

TEST(SpecFile, StrictKeysAndRoundTrip) {
    const auto j = nlohmann::json::parse(R"({"n": 5, "p": 0.2, "length": 500, "relationship": "nonlinear",
                                            "anomaly": "effect", "anomaly_fraction": 0.05, "seed": 9})");
    const auto s = parse_simulation_spec(j);
    EXPECT_EQ(s.n, 5u);
    EXPECT_EQ(s.relationship, Relationship::nonlinear);
    EXPECT_EQ(simulation_spec_to_json(s), j);
    try {
        parse_simulation_spec(nlohmann::json::parse(R"({"n": 5, "lenght": 500})"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("lenght"), std::string::npos);
    }
    EXPECT_THROW(parse_simulation_spec(nlohmann::json::parse(R"({"anomaly_fraction": 0.6})")), ConfigError);
    EXPECT_THROW(parse_simulation_spec(nlohmann::json::parse(R"({"n": 1})")), ConfigError);
}

TEST(SpecFile, LabelsCsvListsRootCauses) {
    const auto ds = simulate(small(AnomalyType::measurement, 17));
    std::ostringstream out;
    write_labels_csv(out, ds);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "timestep,label,root_causes");
    const auto& s = ds.segments.front();
    for (std::size_t t = 0; t <= s.begin; ++t) std::getline(in, line);
    EXPECT_EQ(line, std::to_string(s.begin) + ",1," + ds.graph.names()[*s.root_causes.begin()]);
}
