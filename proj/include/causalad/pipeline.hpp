#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "causalad/config.hpp"
#include "causalad/detection.hpp"
#include "causalad/discovery/discover.hpp"
#include "causalad/error.hpp"
#include "causalad/graph.hpp"
#include "causalad/log.hpp"
#include "causalad/models/local_model.hpp"
#include "causalad/random.hpp"
#include "causalad/timeseries.hpp"

namespace causalad {

namespace detail {

/// Runs independent jobs on up to `threads` workers (0 = hardware concurrency). Results keep job order.
template <typename R>
std::vector<R> run_jobs(const std::vector<std::function<R()>>& jobs, std::size_t threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, jobs.size());
    std::vector<std::optional<R>> out(jobs.size());
    if (threads <= 1) {
        for (std::size_t k = 0; k < jobs.size(); ++k) out[k] = jobs[k]();
    } else {
        std::mutex lock;
        std::size_t next = 0;
        std::exception_ptr failure;
        auto worker = [&] {
            for (;;) {
                std::size_t k;
                {
                    std::lock_guard<std::mutex> g(lock);
                    if (next >= jobs.size() || failure) return;
                    k = next++;
                }
                try {
                    out[k] = jobs[k]();
                } catch (...) {
                    std::lock_guard<std::mutex> g(lock);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    std::vector<R> result;
    result.reserve(out.size());
    for (auto& r : out) result.push_back(std::move(*r));
    return result;
}

}  // namespace detail

/// Fits one model per non-root variable and root models for the rest. Each fit draws from its own
/// seed derived from the variable name, so the result does not depend on fitting order.
inline ModelSet fit_models(const TimeSeriesMatrix& data, const Dag& g, const ModelConfig& cfg, std::uint64_t seed,
                           std::size_t threads = 1, const std::vector<bool>* keep = nullptr) {
    if (data.names() != g.names()) throw ConfigError("graph variables do not match the data columns");
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!g.has_parents(i)) roots.push_back(i);

    std::vector<std::function<models::LocalModel()>> jobs;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.has_parents(i)) continue;
        jobs.push_back([&, i] {
            return models::fit_conditional(data, g, i, cfg.window, cfg.non_root, cfg.estimators,
                                           derive_seed(seed, "model:" + data.name(i)), keep);
        });
    }
    bool forest = cfg.root == models::EstimatorKind::isolation_forest && !roots.empty();
    if (forest && roots.size() < 2) {
        warn("isolation forest needs at least 2 root variables; using the forecaster for '" + data.name(roots[0]) + "'");
        forest = false;
    }
    if (forest) {
        jobs.push_back([&] { return models::fit_isolation_forest(data, roots, cfg.estimators, derive_seed(seed, "model:roots"), keep); });
    } else {
        for (auto r : roots)
            jobs.push_back([&, r] {
                return models::fit_root_forecaster(data, r, cfg.estimators, derive_seed(seed, "model:" + data.name(r)), keep);
            });
    }
    ModelSet set;
    set.names = data.names();
    set.models = detail::run_jobs(jobs, threads);
    std::sort(set.models.begin(), set.models.end(),
              [](const auto& a, const auto& b) { return a.variables.front() < b.variables.front(); });
    set.owners();
    return set;
}

/// Everything needed to score new data: the graph, the training normalizer and the fitted models.
struct Bundle {
    Dag graph;
    Normalizer normalizer;
    ModelSet models;

    DetectionReport score(const TimeSeriesMatrix& raw) const { return score_rows(models, normalizer.apply(raw)); }
};

/// Normalizes, discovers a graph unless one is given, and fits all models.
inline Bundle train(const TimeSeriesMatrix& raw_train, const PipelineConfig& cfg, std::optional<Dag> graph = std::nullopt) {
    Bundle b;
    b.normalizer = Normalizer::fit(raw_train, cfg.normalization);
    const auto data = b.normalizer.apply(raw_train);
    b.graph = graph ? std::move(*graph) : discovery::discover(data, cfg.discovery);
    if (b.graph.names() != data.names()) throw ConfigError("graph variables do not match the data columns");
    b.models = fit_models(data, b.graph, cfg.models, derive_seed(cfg.seed, "train"), cfg.threads);
    return b;
}

// ---------------------------------------------------------------------------
// Iterative retraining

struct RetrainState {
    std::size_t iterations = 0;
    std::vector<bool> mask;  // true = row kept for training
    std::vector<Dag> graphs;
    std::vector<std::size_t> differences;  // between consecutive graphs
    std::vector<std::size_t> rows_kept;    // training rows used by each iteration
};

struct RetrainResult {
    Dag graph;
    ModelSet models;
    RetrainState state;
};

/// Called after each iteration's fit with (iteration, graph, models).
using RetrainCallback = std::function<void(std::size_t, const Dag&, const ModelSet&)>;

/// Alternates discovery, fitting and removal of the highest-scored training rows until two consecutive
/// graphs have identical adjacency or the iteration cap is reached. `data` is already normalized.
inline RetrainResult iterative_retrain(const TimeSeriesMatrix& data, const PipelineConfig& cfg,
                                       const RetrainCallback& on_iteration = {}) {
    const auto& rc = cfg.retrain;
    if (!(rc.removal_fraction > 0.0 && rc.removal_fraction <= 0.2))
        throw ArgumentError("removal fraction must lie in (0, 0.2]");
    if (rc.max_iterations < 1) throw ArgumentError("max iterations must be at least 1");
    const auto t_len = data.rows();
    const auto per_iteration = static_cast<std::size_t>(std::floor(rc.removal_fraction * static_cast<double>(t_len)));

    RetrainResult result;
    auto& st = result.state;
    st.mask.assign(t_len, true);
    for (std::size_t it = 0; it < rc.max_iterations; ++it) {
        std::vector<std::size_t> kept;
        for (std::size_t t = 0; t < t_len; ++t)
            if (st.mask[t]) kept.push_back(t);
        const auto graph = discovery::discover(data.select_rows(kept), cfg.discovery);
        auto models = fit_models(data, graph, cfg.models, derive_seed(cfg.seed, "train"), cfg.threads, &st.mask);
        st.iterations = it + 1;
        st.rows_kept.push_back(kept.size());
        if (!st.graphs.empty()) st.differences.push_back(adjacency_difference(st.graphs.back().graph(), graph.graph()));
        st.graphs.push_back(graph);
        result.graph = graph;
        result.models = std::move(models);
        if (on_iteration) on_iteration(it, result.graph, result.models);
        if (!st.differences.empty() && st.differences.back() == 0) break;
        if (it + 1 == rc.max_iterations) break;

        if (kept.size() < 50 + per_iteration) {
            warn("iterative retraining stopped: removing more rows would leave fewer than 50");
            break;
        }
        const auto report = score_rows(result.models, data);
        std::vector<std::size_t> candidates;
        for (auto t : kept)
            if (!report.warmup[t]) candidates.push_back(t);
        const auto take = std::min(per_iteration, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                          [&](std::size_t a, std::size_t b) {
                              return report.scores[a] != report.scores[b] ? report.scores[a] > report.scores[b] : a < b;
                          });
        for (std::size_t k = 0; k < take; ++k) st.mask[candidates[k]] = false;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Bundle persistence

inline constexpr int kBundleVersion = 1;

inline nlohmann::json normalizer_to_json(const Normalizer& n) {
    return {{"mode", to_string(n.mode)}, {"center", n.center}, {"scale", n.scale}};
}

inline Normalizer normalizer_from_json(const nlohmann::json& j) {
    Normalizer n;
    n.mode = parse_normalization_mode(j.at("mode").get<std::string>());
    n.center = j.at("center").get<std::vector<double>>();
    n.scale = j.at("scale").get<std::vector<double>>();
    if (n.center.size() != n.scale.size()) throw ParseError("normalizer center/scale length mismatch");
    return n;
}

inline void save_bundle(const std::filesystem::path& dir, const Bundle& b) {
    std::filesystem::create_directories(dir);
    save_graph(dir / "graph.txt", b.graph.graph());
    nlohmann::json manifest{{"version", kBundleVersion},
                            {"graph_hash", hash_hex(graph_hash(b.graph.graph()))},
                            {"variables", b.models.names},
                            {"normalizer", normalizer_to_json(b.normalizer)},
                            {"models", nlohmann::json::array()}};
    for (std::size_t k = 0; k < b.models.models.size(); ++k) {
        const auto& m = b.models.models[k];
        const auto file = "model_" + std::to_string(k) + ".json";
        std::ofstream out(dir / file);
        if (!out) throw Error("cannot write " + (dir / file).string());
        out << nlohmann::json(m).dump();
        std::vector<std::string> vars;
        for (auto v : m.variables) vars.push_back(b.models.names[v]);
        manifest["models"].push_back({{"file", file}, {"kind", models::to_string(m.kind)}, {"variables", vars}});
    }
    std::ofstream out(dir / "bundle.json");
    if (!out) throw Error("cannot write " + (dir / "bundle.json").string());
    out << manifest.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Loads a bundle. When `expected_graph` is given its hash must match the one the models were trained on.
inline Bundle load_bundle(const std::filesystem::path& dir, const MixedGraph* expected_graph = nullptr) {
    const auto manifest = read_json_file(dir / "bundle.json");
    Bundle b;
    try {
        if (manifest.at("version").get<int>() != kBundleVersion) throw ParseError("unsupported bundle version");
        const auto recorded = manifest.at("graph_hash").get<std::string>();
        const auto stored = load_graph(dir / "graph.txt");
        if (hash_hex(graph_hash(stored)) != recorded) throw ConfigError("bundle graph file does not match its recorded hash");
        if (expected_graph && hash_hex(graph_hash(*expected_graph)) != recorded)
            throw ConfigError("graph hash " + hash_hex(graph_hash(*expected_graph)) + " does not match the bundle's " + recorded);
        b.graph = Dag(stored);
        b.normalizer = normalizer_from_json(manifest.at("normalizer"));
        b.models.names = manifest.at("variables").get<std::vector<std::string>>();
        for (const auto& entry : manifest.at("models"))
            b.models.models.push_back(read_json_file(dir / entry.at("file").get<std::string>()).get<models::LocalModel>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed bundle: ") + e.what());
    }
    if (b.models.names != b.graph.names()) throw ConfigError("bundle variables do not match its graph");
    b.models.owners();
    return b;
}

}  // namespace causalad
