#include <gtest/gtest.h>

#include "causalad.hpp"
#include "support/oracles.hpp"

using namespace causalad;
using namespace causalad::eval;

namespace {

std::vector<int> window_truth(std::size_t n, std::size_t begin, std::size_t end) {
    std::vector<int> t(n, 0);
    for (auto i = begin; i < end; ++i) t[i] = 1;
    return t;
}

Prf brute_force(std::span<const double> scores, std::span<const int> truth, double v) {
    std::vector<int> pred(scores.size());
    for (std::size_t t = 0; t < scores.size(); ++t) pred[t] = scores[t] >= v;
    return prf(point_adjust(pred, truth), truth);
}

}  // namespace

TEST(PointAdjust, SingleHitFillsSegment) {
    const auto truth = window_truth(20, 5, 11);
    std::vector<int> pred(20, 0);
    pred[7] = 1;
    const auto adj = point_adjust(pred, truth);
    EXPECT_EQ(adj, truth);
    const auto r = prf(adj, truth);
    EXPECT_DOUBLE_EQ(r.precision, 1.0);
    EXPECT_DOUBLE_EQ(r.recall, 1.0);
}

TEST(PointAdjust, FalsePositiveOnly) {
    const auto truth = window_truth(20, 5, 11);
    std::vector<int> pred(20, 0);
    pred[3] = 1;
    const auto adj = point_adjust(pred, truth);
    EXPECT_EQ(adj, pred);
    const auto r = prf(adj, truth);
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.recall, 0.0);
    EXPECT_EQ(r.f1, 0.0);
}

TEST(PointAdjust, LengthMismatch) {
    const std::vector<int> a{0, 1}, b{0};
    EXPECT_THROW(point_adjust(a, b), ArgumentError);
}

TEST(Segments, MaximalRuns) {
    const std::vector<int> t{1, 1, 0, 0, 1, 0, 1, 1, 1};
    const auto s = segments(t);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].begin, 0u);
    EXPECT_EQ(s[0].length(), 2u);
    EXPECT_EQ(s[1].begin, 4u);
    EXPECT_EQ(s[2].end, 9u);
}

TEST(Prf, CountsFormula) {
    const auto r = prf_from_counts(9, 1, 3);
    EXPECT_NEAR(r.precision, 0.9, 1e-12);
    EXPECT_NEAR(r.recall, 0.75, 1e-12);
    EXPECT_NEAR(r.f1, 2 * 0.9 * 0.75 / 1.65, 1e-12);
    EXPECT_NEAR(r.f1, 0.818, 1e-3);
    const auto z = prf_from_counts(0, 0, 0);
    EXPECT_EQ(z.f1, 0.0);
}

TEST(Sweep, SeparableScoresReachOne) {
    const auto truth = window_truth(50, 10, 20);
    std::vector<double> s(50, 0.1);
    for (int t = 10; t < 20; ++t) s[t] = 0.9;
    const auto r = best_f1_sweep(s, truth);
    EXPECT_DOUBLE_EQ(r.best.f1, 1.0);
    EXPECT_DOUBLE_EQ(r.threshold, 0.9);
}

TEST(Sweep, ConstantScoresLabelEverything) {
    const auto truth = window_truth(40, 10, 20);
    const std::vector<double> s(40, 0.5);
    const auto r = best_f1_sweep(s, truth);
    EXPECT_NEAR(r.best.precision, 0.25, 1e-12);
    EXPECT_DOUBLE_EQ(r.best.recall, 1.0);
}

TEST(Sweep, MatchesBruteForceAndDominatesGrid) {
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> truth(300, 0);
        for (int k = 0; k < 8; ++k) {
            const auto b = static_cast<std::size_t>(u(rng) * 280);
            for (auto t = b; t < b + 1 + static_cast<std::size_t>(u(rng) * 15) && t < 300; ++t) truth[t] = 1;
        }
        std::vector<double> s(300);
        for (std::size_t t = 0; t < 300; ++t) s[t] = std::round((u(rng) + 0.4 * truth[t]) * 50.0) / 50.0;
        const auto r = best_f1_sweep(s, truth);
        double best = 0.0, lowest = 0.0;
        std::vector<double> distinct(s);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (double v : distinct) {
            const auto f = brute_force(s, truth, v).f1;
            if (f > best + 1e-15) {
                best = f;
                lowest = v;
            }
        }
        EXPECT_NEAR(r.best.f1, best, 1e-12);
        EXPECT_DOUBLE_EQ(r.threshold, lowest);
        EXPECT_NEAR(brute_force(s, truth, r.threshold).f1, r.best.f1, 1e-12);
        for (int g = 0; g <= 1000; ++g) EXPECT_LE(brute_force(s, truth, g / 1000.0 * 1.5).f1, r.best.f1 + 1e-12);
    }
}

TEST(Sweep, ThresholdMonotoneOracle) {
    const auto c = oracle::point_adjust_and_threshold_monotone();
    EXPECT_TRUE(c.pass) << c.detail;
}

TEST(Threshold, StrictComparison) {
    const auto truth = window_truth(10, 4, 6);
    std::vector<double> s(10, 0.0);
    s[4] = 0.5;
    EXPECT_EQ(evaluate_threshold(s, truth, 0.5).recall, 0.0);
    EXPECT_EQ(evaluate_threshold(s, truth, 0.49).recall, 1.0);
}

TEST(HitRatio, TopOneAndMisses) {
    const std::vector<std::set<std::size_t>> truth{{2}, {0}, {1}};
    const std::vector<std::optional<std::vector<std::size_t>>> ranks{std::vector<std::size_t>{2, 0, 1},
                                                                     std::vector<std::size_t>{1, 0, 2}, std::nullopt};
    EXPECT_NEAR(hit_ratio_at_k(ranks, truth, 1), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(hit_ratio_at_k(ranks, truth, 2), 2.0 / 3.0, 1e-12);
    // k = d reaches the detected fraction.
    EXPECT_NEAR(hit_ratio_at_k(ranks, truth, 3), 2.0 / 3.0, 1e-12);
    EXPECT_THROW(hit_ratio_at_k(ranks, truth, 0), ArgumentError);
}

TEST(HitRatio, MonotoneInK) {
    Rng rng(2);
    std::vector<std::set<std::size_t>> truth;
    std::vector<std::optional<std::vector<std::size_t>>> ranks;
    for (int s = 0; s < 200; ++s) {
        std::vector<std::size_t> r(6);
        std::iota(r.begin(), r.end(), std::size_t{0});
        std::shuffle(r.begin(), r.end(), rng);
        ranks.push_back(s % 7 == 0 ? std::nullopt : std::optional(r));
        truth.push_back({static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 5)(rng))});
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= 6; ++k) {
        const double h = hit_ratio_at_k(ranks, truth, k);
        EXPECT_GE(h, prev);
        prev = h;
    }
}

TEST(Baseline, PointMassAlwaysChosen) {
    Rng rng(3);
    const std::vector<double> s{0.0, 0.0, 1.0, 0.0};
    for (int i = 0; i < 100; ++i) EXPECT_EQ(rca_baseline(s, 1, rng).front(), 2u);
}

TEST(Baseline, UniformWhenAllZero) {
    const std::vector<std::optional<std::vector<double>>> initial{std::vector<double>(4, 0.0)};
    const std::vector<std::set<std::size_t>> truth{{1}};
    EXPECT_NEAR(baseline_hit_ratio(initial, truth, 1, 10000, 4), 0.25, 0.02);
}

TEST(Baseline, ProportionalAndDistinct) {
    Rng rng(5);
    const std::vector<double> s{1.0, 3.0, 0.0, 0.0};
    int first = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto r = rca_baseline(s, 3, rng);
        EXPECT_EQ(std::set<std::size_t>(r.begin(), r.end()).size(), 3u);
        first += r.front() == 1;
    }
    EXPECT_NEAR(first / 10000.0, 0.75, 0.02);
    EXPECT_THROW(rca_baseline(std::vector<double>{-1.0, 1.0}, 1, rng), ArgumentError);
    EXPECT_THROW(rca_baseline(s, 5, rng), ArgumentError);
}

TEST(Ranking, InvariantUnderRenaming) {
    Rng rng(6);
    MixedGraph g(oracle::names(5));
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    g.add_directed(0, 3);
    const Dag dag(g);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    MixedGraph h(oracle::names(5));
    for (const auto& e : g.directed_edges()) h.add_directed(perm[e.from], perm[e.to], e.lag);
    const Dag dag2(h);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> s(5), s2(5);
        for (std::size_t i = 0; i < 5; ++i) s2[perm[i]] = s[i] = u(rng);
        const auto rs = propagate(s, dag, 0.5);
        const auto rs2 = propagate(s2, dag2, 0.5);
        for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(rs2[perm[i]], rs[i], 1e-12);
    }
}

TEST(Report, JsonShape) {
    EvalReport r;
    r.at_threshold = prf_from_counts(1, 1, 0);
    r.sweep = SweepResult{prf_from_counts(1, 0, 0), 0.7};
    r.hit_ratios = {0.5, 0.75};
    const auto j = to_json(r);
    EXPECT_DOUBLE_EQ(j["threshold_metrics"]["precision"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(j["best"]["threshold"].get<double>(), 0.7);
    EXPECT_DOUBLE_EQ(j["hit_ratio"]["HR@2"].get<double>(), 0.75);
}
