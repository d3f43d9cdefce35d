#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/random.hpp"

namespace causalad::eval {

struct Interval {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t length() const { return end - begin; }
};

/// Maximal runs of 1 in a label sequence.
inline std::vector<Interval> segments(std::span<const int> truth) {
    std::vector<Interval> out;
    for (std::size_t t = 0; t < truth.size();) {
        if (truth[t] != 1) {
            ++t;
            continue;
        }
        auto e = t;
        while (e < truth.size() && truth[e] == 1) ++e;
        out.push_back({t, e});
        t = e;
    }
    return out;
}

/// Every truth segment holding at least one prediction becomes fully predicted.
inline std::vector<int> point_adjust(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw ArgumentError("prediction and truth lengths differ");
    std::vector<int> out(predicted.begin(), predicted.end());
    for (const auto& s : segments(truth)) {
        bool hit = false;
        for (auto t = s.begin; t < s.end && !hit; ++t) hit = predicted[t] == 1;
        if (hit)
            for (auto t = s.begin; t < s.end; ++t) out[t] = 1;
    }
    return out;
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline Prf prf_from_counts(double tp, double fp, double fn) {
    Prf r;
    r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

inline Prf prf(std::span<const int> adjusted, std::span<const int> truth) {
    if (adjusted.size() != truth.size()) throw ArgumentError("prediction and truth lengths differ");
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        tp += adjusted[t] == 1 && truth[t] == 1;
        fp += adjusted[t] == 1 && truth[t] != 1;
        fn += adjusted[t] != 1 && truth[t] == 1;
    }
    return prf_from_counts(tp, fp, fn);
}

/// Point-adjusted P/R/F1 of the labels score > lambda.
inline Prf evaluate_threshold(std::span<const double> scores, std::span<const int> truth, double lambda) {
    if (scores.size() != truth.size()) throw ArgumentError("score and truth lengths differ");
    std::vector<int> pred(scores.size());
    for (std::size_t t = 0; t < scores.size(); ++t) pred[t] = scores[t] > lambda ? 1 : 0;
    return prf(point_adjust(pred, truth), truth);
}

struct SweepResult {
    Prf best;
    double threshold = 0.0;  // predictions are score >= threshold
};

/// Best point-adjusted F1 over the candidate rules score >= v for every distinct score v.
/// Ties keep the lowest v. O(N log N): a segment is detected at v exactly when its maximum is >= v.
inline SweepResult best_f1_sweep(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size()) throw ArgumentError("score and truth lengths differ");
    if (scores.empty()) return {};
    std::vector<std::pair<double, std::size_t>> seg;  // (max score, length)
    std::vector<double> normal;
    std::vector<bool> inside(truth.size(), false);
    double positives = 0;
    for (const auto& s : segments(truth)) {
        double m = scores[s.begin];
        for (auto t = s.begin; t < s.end; ++t) {
            m = std::max(m, scores[t]);
            inside[t] = true;
        }
        seg.push_back({m, s.length()});
        positives += static_cast<double>(s.length());
    }
    for (std::size_t t = 0; t < scores.size(); ++t)
        if (!inside[t]) normal.push_back(scores[t]);
    std::sort(seg.begin(), seg.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::sort(normal.begin(), normal.end(), std::greater<>());
    std::vector<double> candidates(scores.begin(), scores.end());
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    SweepResult best;
    best.threshold = candidates.front();
    bool first = true;
    std::size_t si = 0, ni = 0;
    double tp = 0;
    for (double v : candidates) {  // descending, so later candidates are lower thresholds
        while (si < seg.size() && seg[si].first >= v) tp += static_cast<double>(seg[si++].second);
        while (ni < normal.size() && normal[ni] >= v) ++ni;
        const auto r = prf_from_counts(tp, static_cast<double>(ni), positives - tp);
        if (first || r.f1 >= best.best.f1) {
            best.best = r;
            best.threshold = v;
            first = false;
        }
    }
    return best;
}

/// Fraction of segments whose top-k ranking intersects the truth set. Undetected segments (no ranking) miss.
inline double hit_ratio_at_k(const std::vector<std::optional<std::vector<std::size_t>>>& rankings,
                             const std::vector<std::set<std::size_t>>& truth, std::size_t k) {
    if (k < 1) throw ArgumentError("k must be at least 1");
    if (rankings.size() != truth.size()) throw ArgumentError("one ranking slot per truth segment is required");
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t s = 0; s < truth.size(); ++s) {
        if (!rankings[s]) continue;
        const auto& r = *rankings[s];
        for (std::size_t j = 0; j < std::min(k, r.size()); ++j)
            if (truth[s].count(r[j])) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

/// k distinct variables drawn without replacement with probability proportional to s (uniform when s sums to 0).
inline std::vector<std::size_t> rca_baseline(std::span<const double> s, std::size_t k, Rng& rng) {
    if (k < 1 || k > s.size()) throw ArgumentError("k must lie in [1, number of variables]");
    std::vector<double> w(s.begin(), s.end());
    for (double v : w)
        if (!(v >= 0.0)) throw ArgumentError("baseline scores must be nonnegative");
    std::vector<std::size_t> out;
    std::vector<bool> taken(w.size(), false);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!taken[i]) total += w[i];
        std::size_t chosen = w.size();
        if (total > 0.0) {
            double r = u(rng) * total;
            for (std::size_t i = 0; i < w.size(); ++i) {
                if (taken[i] || w[i] <= 0.0) continue;
                chosen = i;
                r -= w[i];
                if (r < 0.0) break;
            }
        } else {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < w.size(); ++i)
                if (!taken[i]) free.push_back(i);
            chosen = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
        }
        taken[chosen] = true;
        out.push_back(chosen);
    }
    return out;
}

/// Baseline HR@k averaged over trials. `initial` holds S for each segment, empty for undetected ones.
inline double baseline_hit_ratio(const std::vector<std::optional<std::vector<double>>>& initial,
                                 const std::vector<std::set<std::size_t>>& truth, std::size_t k, std::size_t trials,
                                 std::uint64_t seed) {
    if (initial.size() != truth.size()) throw ArgumentError("one score slot per truth segment is required");
    if (trials == 0) throw ArgumentError("trials must be at least 1");
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<std::optional<std::vector<std::size_t>>> rankings(initial.size());
        for (std::size_t s = 0; s < initial.size(); ++s)
            if (initial[s]) rankings[s] = rca_baseline(*initial[s], std::min(k, initial[s]->size()), rng);
        total += hit_ratio_at_k(rankings, truth, k);
    }
    return total / static_cast<double>(trials);
}

struct EvalReport {
    Prf at_threshold;
    std::optional<SweepResult> sweep;
    std::vector<double> hit_ratios;  // HR@1..HR@kmax
};

inline nlohmann::json to_json(const Prf& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j{{"threshold_metrics", to_json(r.at_threshold)}};
    if (r.sweep) j["best"] = {{"precision", r.sweep->best.precision}, {"recall", r.sweep->best.recall},
                              {"f1", r.sweep->best.f1}, {"threshold", r.sweep->threshold}};
    if (!r.hit_ratios.empty()) {
        nlohmann::json hr = nlohmann::json::object();
        for (std::size_t k = 0; k < r.hit_ratios.size(); ++k) hr["HR@" + std::to_string(k + 1)] = r.hit_ratios[k];
        j["hit_ratio"] = hr;
    }
    return j;
}

}  // namespace causalad::eval
