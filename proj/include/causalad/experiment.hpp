#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <set>
#include <vector>

#include "causalad/config.hpp"
#include "causalad/detection.hpp"
#include "causalad/evaluation.hpp"
#include "causalad/pipeline.hpp"
#include "causalad/rca.hpp"
#include "causalad/simulation.hpp"

namespace causalad {

struct SegmentOutcome {
    eval::Interval rows;  // within the scored data
    std::set<std::size_t> root_causes;
    bool detected = false;
    std::size_t peak = 0;                // row of the highest score inside the segment
    std::vector<std::size_t> ranking;    // full RS ranking at the peak
    std::vector<double> initial;         // S at the peak
};

struct Outcome {
    eval::SweepResult sweep;
    eval::Prf at_percentile;
    std::vector<double> hit_ratio;           // HR@1..HR@kmax
    std::vector<double> baseline_hit_ratio;  // same k range
    std::vector<SegmentOutcome> segments;
    Dag graph;
    DetectionReport report;
    std::vector<int> truth;
    std::vector<std::set<std::size_t>> causes;
    double train_seconds = 0.0;
    double detect_seconds = 0.0;
};

/// Segment-level RCA bookkeeping for a scored stretch of labeled data. Labels are score >= threshold.
inline std::vector<SegmentOutcome> evaluate_segments(const DetectionReport& report, std::span<const int> truth,
                                                     const std::vector<std::set<std::size_t>>& causes, double threshold,
                                                     const Dag& g, double alpha) {
    const auto segs = eval::segments(truth);
    if (segs.size() != causes.size()) throw ArgumentError("one root-cause set per truth segment is required");
    std::vector<SegmentOutcome> out;
    std::vector<double> m(report.names.size());
    for (std::size_t k = 0; k < segs.size(); ++k) {
        SegmentOutcome so;
        so.rows = segs[k];
        so.root_causes = causes[k];
        so.peak = segs[k].begin;
        for (auto t = segs[k].begin; t < segs[k].end; ++t) {
            if (report.scores[t] > report.scores[so.peak]) so.peak = t;
            so.detected = so.detected || (!report.warmup[t] && report.scores[t] >= threshold);
        }
        if (!report.warmup[so.peak]) {
            for (std::size_t i = 0; i < m.size(); ++i)
                m[i] = report.probabilities(static_cast<Eigen::Index>(so.peak), static_cast<Eigen::Index>(i));
            const auto r = analyze_row(report.timesteps[so.peak], m, g, alpha, m.size());
            so.ranking = r.ranking;
            so.initial = r.initial;
        } else {
            so.detected = false;
        }
        out.push_back(std::move(so));
    }
    return out;
}

struct ExperimentOptions {
    std::size_t max_k = 4;
    std::size_t baseline_trials = 1000;
};

/// Trains on the head of a simulated dataset, scores the tail, and evaluates detection and RCA.
inline Outcome run_experiment(const sim::SimulatedDataset& ds, const PipelineConfig& cfg, std::optional<Dag> graph = std::nullopt,
                              const ExperimentOptions& opt = {}) {
    using clock = std::chrono::steady_clock;
    const auto [train_raw, test_raw] = train_test_split(ds.data, cfg.split);
    const auto cut = train_raw.rows();

    Outcome out;
    const auto t0 = clock::now();
    const Bundle bundle = train(train_raw, cfg, std::move(graph));
    const auto t1 = clock::now();
    const auto report = bundle.score(test_raw);
    const auto t2 = clock::now();
    out.train_seconds = std::chrono::duration<double>(t1 - t0).count();
    out.detect_seconds = std::chrono::duration<double>(t2 - t1).count();
    out.graph = bundle.graph;

    std::vector<int> truth(ds.labels.begin() + static_cast<std::ptrdiff_t>(cut), ds.labels.end());
    out.sweep = eval::best_f1_sweep(report.scores, truth);
    const auto pool = report.scored_values();
    out.at_percentile = eval::evaluate_threshold(report.scores, truth, threshold_from_percentile(pool, cfg.detection.percentile));

    std::vector<std::set<std::size_t>> causes;
    for (const auto& s : eval::segments(truth)) {
        const auto row = s.begin + cut;
        std::set<std::size_t> c;
        for (const auto& seg : ds.segments)
            if (seg.begin <= row && row < seg.end) c = seg.root_causes;
        causes.push_back(c);
    }
    out.segments = evaluate_segments(report, truth, causes, out.sweep.threshold, bundle.graph, cfg.rca.alpha);
    out.report = report;
    out.truth = std::move(truth);
    out.causes = std::move(causes);

    std::vector<std::optional<std::vector<std::size_t>>> rankings;
    std::vector<std::optional<std::vector<double>>> initial;
    for (const auto& s : out.segments) {
        rankings.push_back(s.detected ? std::optional(s.ranking) : std::nullopt);
        initial.push_back(s.detected ? std::optional(s.initial) : std::nullopt);
    }
    const auto kmax = std::min(opt.max_k, ds.graph.size());
    for (std::size_t k = 1; k <= kmax; ++k) {
        out.hit_ratio.push_back(eval::hit_ratio_at_k(rankings, out.causes, k));
        out.baseline_hit_ratio.push_back(
            eval::baseline_hit_ratio(initial, out.causes, k, opt.baseline_trials, derive_seed(cfg.seed, "baseline:" + std::to_string(k))));
    }
    return out;
}

}  // namespace causalad
