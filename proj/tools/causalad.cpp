// causalad: command-line front end for causal anomaly detection and root-cause analysis.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "causalad.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace causalad;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2 };

class Stopwatch {
public:
    void lap(const std::string& stage) {
        const auto now = std::chrono::steady_clock::now();
        timings_[stage] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }
    const json& timings() const { return timings_; }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    json timings_ = json::object();
};

struct Manifest {
    std::string subcommand;
    json config = json::object();
    json inputs = json::object();
    json outputs = json::array();
    std::uint64_t seed = 0;
    Stopwatch clock;

    void write(const fs::path& dir) const {
        json j{{"subcommand", subcommand}, {"version", kVersion}, {"config", config},   {"inputs", inputs},
               {"outputs", outputs},       {"seed", seed},       {"timings", clock.timings()}};
        std::ofstream out(dir / "manifest.json");
        if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
        out << j.dump(2) << '\n';
    }
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

/// Plain string table for the tool's own CSV outputs.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw SchemaError("missing column '" + name + "'");
    }
};

Table read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + " is empty");
    t.header = causalad::detail::split_csv_line(line);
    for (auto& h : t.header) h = std::string(causalad::detail::trim(h));
    while (std::getline(in, line)) {
        if (causalad::detail::trim(line).empty()) continue;
        auto f = causalad::detail::split_csv_line(line);
        if (f.size() != t.header.size()) throw ParseError(path.string() + ": ragged row");
        t.rows.push_back(std::move(f));
    }
    return t;
}

double to_double(const std::string& s) {
    auto v = causalad::detail::parse_cell(s);
    if (!v) throw ParseError("not a number: '" + s + "'");
    return *v;
}

std::int64_t to_int(const std::string& s) { return static_cast<std::int64_t>(std::llround(to_double(s))); }

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

TimeSeriesMatrix load_data(const fs::path& path, const PipelineConfig& cfg) {
    CsvOptions opt;
    opt.nan_policy = cfg.nan_policy;
    return load_csv(path, opt);
}

/// Ground-truth labels keyed by timestep.
struct Truth {
    std::map<std::int64_t, int> label;
    std::map<std::int64_t, std::vector<std::string>> causes;
};

Truth read_truth(const fs::path& path) {
    const auto t = read_table(path);
    const auto ts = t.column("timestep"), lb = t.column("label");
    std::optional<std::size_t> rc;
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (t.header[j] == "root_causes") rc = j;
    Truth out;
    for (const auto& r : t.rows) {
        const auto step = to_int(r[ts]);
        out.label[step] = to_int(r[lb]) != 0 ? 1 : 0;
        if (rc) out.causes[step] = split_list(r[*rc], ';');
    }
    return out;
}

std::vector<int> align_truth(const Truth& truth, const std::vector<std::int64_t>& steps) {
    std::vector<int> out;
    for (auto s : steps) {
        auto it = truth.label.find(s);
        if (it == truth.label.end()) throw SchemaError("truth has no label for timestep " + std::to_string(s));
        out.push_back(it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct Common {
    std::string out;
    std::size_t threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output directory")->required();
    sub->add_option("--threads", c.threads, "Worker threads for per-variable fits (0 = auto)")->capture_default_str();
}

struct Overrides {
    std::optional<std::string> algorithm;
    std::optional<double> alpha, penalty_discount, split, percentile, threshold, removal_fraction, rca_alpha;
    std::optional<std::size_t> max_degree, window, retrain_iterations, top_k;
    std::optional<int> max_lag;
    std::optional<std::string> estimator, root_estimator;
    std::optional<std::uint64_t> seed;
};

void add_discovery_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--algorithm", o.algorithm, "Causal discovery algorithm: pc or ges (default ges)");
    sub->add_option("--alpha", o.alpha, "Significance level of the Fisher-z test for pc (default 0.05)");
    sub->add_option("--max-degree", o.max_degree, "Maximum node degree (default 5)");
    sub->add_option("--penalty-discount", o.penalty_discount, "BIC penalty multiplier for ges (default 20)");
    sub->add_option("--max-lag", o.max_lag, "Largest time lag considered during discovery (default 0)");
}

void add_model_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--estimator", o.estimator, "Non-root estimator: cvae, mlp_regressor or linear_gaussian (default cvae)");
    sub->add_option("--root-estimator", o.root_estimator,
                    "Root estimator: root_forecaster or isolation_forest (default root_forecaster)");
    sub->add_option("--window", o.window, "Parent window length k (default 1)");
    sub->add_option("--seed", o.seed, "Master seed (default from config)");
}

void apply(const Overrides& o, PipelineConfig& c) {
    if (o.algorithm) c.discovery.algorithm = discovery::parse_algorithm(*o.algorithm);
    if (o.alpha) c.discovery.alpha = *o.alpha;
    if (o.max_degree) c.discovery.max_degree = *o.max_degree;
    if (o.penalty_discount) c.discovery.penalty_discount = *o.penalty_discount;
    if (o.max_lag) c.discovery.max_lag = *o.max_lag;
    if (o.split) c.split = *o.split;
    if (o.window) c.models.window = *o.window;
    if (o.estimator) c.models.non_root = models::parse_estimator_kind(*o.estimator);
    if (o.root_estimator) c.models.root = models::parse_estimator_kind(*o.root_estimator);
    if (o.percentile) c.detection.percentile = *o.percentile;
    if (o.threshold) c.detection.threshold = *o.threshold;
    if (o.retrain_iterations) {
        c.retrain.enabled = *o.retrain_iterations > 0;
        if (*o.retrain_iterations > 0) c.retrain.max_iterations = *o.retrain_iterations;
    }
    if (o.removal_fraction) c.retrain.removal_fraction = *o.removal_fraction;
    if (o.rca_alpha) c.rca.alpha = *o.rca_alpha;
    if (o.top_k) c.rca.top_k = *o.top_k;
    if (o.seed) c.seed = *o.seed;
    c.validate();
}

TimeSeriesMatrix head(const TimeSeriesMatrix& m, std::optional<double> split) {
    return split ? train_test_split(m, *split).first : m;
}

TimeSeriesMatrix tail(const TimeSeriesMatrix& m, std::optional<double> split) {
    return split ? train_test_split(m, *split).second : m;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const std::string& spec_path, std::optional<std::uint64_t> seed, const Common& c) {
    Manifest mf;
    mf.subcommand = "simulate";
    sim::SimulationSpec spec;
    if (!spec_path.empty()) {
        spec = sim::parse_simulation_spec(read_json_file(spec_path));
        mf.inputs["spec"] = spec_path;
    }
    if (seed) spec.seed = *seed;
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto ds = sim::simulate(spec);
    mf.clock.lap("simulate");
    write_csv(out / "data.csv", ds.data);
    save_graph(out / "graph.txt", ds.graph.graph());
    auto labels = open_out(out / "labels.csv");
    sim::write_labels_csv(labels, ds);
    open_out(out / "spec.json") << sim::simulation_spec_to_json(spec).dump(2) << '\n';
    mf.clock.lap("write");
    mf.config = sim::simulation_spec_to_json(spec);
    mf.seed = spec.seed;
    mf.outputs = {"data.csv", "graph.txt", "labels.csv", "spec.json"};
    mf.write(out);
    return kOk;
}

int cmd_discover(const std::string& data_path, const Overrides& o, const Common& c, PipelineConfig cfg) {
    apply(o, cfg);
    Manifest mf;
    mf.subcommand = "discover";
    mf.inputs["data"] = data_path;
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto raw = head(load_data(data_path, cfg), o.split);
    const auto data = Normalizer::fit(raw, cfg.normalization).apply(raw);
    mf.clock.lap("load");
    const auto cpdag = discovery::discover_cpdag(data, cfg.discovery);
    const auto dag = discovery::discover(data, cfg.discovery);
    mf.clock.lap("discover");
    save_graph(out / "cpdag.txt", cpdag);
    save_graph(out / "graph.txt", dag.graph());
    mf.config = config_to_json(cfg);
    mf.seed = cfg.seed;
    mf.outputs = {"graph.txt", "cpdag.txt"};
    mf.write(out);
    std::cout << "discovered " << dag.graph().num_edges() << " edges; graph hash " << hash_hex(graph_hash(dag.graph())) << '\n';
    return kOk;
}

int cmd_train(const std::string& data_path, const std::string& graph_path, const std::string& truth_path, const Overrides& o,
              const Common& c, PipelineConfig cfg) {
    apply(o, cfg);
    cfg.threads = c.threads;
    Manifest mf;
    mf.subcommand = "train";
    mf.inputs["data"] = data_path;
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto all = load_data(data_path, cfg);
    const auto raw = head(all, o.split);
    mf.clock.lap("load");
    std::optional<Dag> graph;
    if (!graph_path.empty()) {
        graph = Dag(load_graph(graph_path));
        mf.inputs["graph"] = graph_path;
    }
    Bundle bundle;
    if (cfg.retrain.enabled) {
        if (graph) throw ConfigError("iterative retraining rediscovers the graph; drop --graph or disable retraining");
        bundle.normalizer = Normalizer::fit(raw, cfg.normalization);
        const auto data = bundle.normalizer.apply(raw);
        std::optional<TimeSeriesMatrix> test;
        std::optional<std::vector<int>> truth;
        if (!truth_path.empty()) {
            if (!o.split) throw ConfigError("--truth needs --split so held-out rows exist");
            test = tail(all, o.split);
            std::vector<std::int64_t> steps;
            for (std::size_t t = 0; t < test->rows(); ++t) steps.push_back(test->start_index() + static_cast<std::int64_t>(t));
            truth = align_truth(read_truth(truth_path), steps);
            mf.inputs["truth"] = truth_path;
        }
        std::vector<double> f1s;
        const auto result = iterative_retrain(data, cfg, [&](std::size_t, const Dag&, const ModelSet& models) {
            if (!truth) return;
            const auto rep = score_rows(models, bundle.normalizer.apply(*test));
            f1s.push_back(eval::best_f1_sweep(rep.scores, *truth).best.f1);
        });
        bundle.graph = result.graph;
        bundle.models = result.models;
        auto csv = open_out(out / "retrain.csv");
        csv << "iteration,adjacency_difference,rows_kept" << (truth ? ",f1" : "") << '\n';
        for (std::size_t it = 0; it < result.state.iterations; ++it) {
            csv << it << ',' << (it == 0 ? std::string() : std::to_string(result.state.differences[it - 1])) << ','
                << result.state.rows_kept[it];
            if (truth) csv << ',' << causalad::detail::format_double(f1s[it]);
            csv << '\n';
        }
        mf.outputs.push_back("retrain.csv");
    } else {
        bundle = train(raw, cfg, graph);
    }
    mf.clock.lap("train");
    save_bundle(out, bundle);
    mf.config = config_to_json(cfg);
    mf.seed = cfg.seed;
    mf.outputs.push_back("bundle.json");
    mf.outputs.push_back("graph.txt");
    mf.write(out);
    std::cout << "trained " << bundle.models.models.size() << " models; graph hash " << hash_hex(graph_hash(bundle.graph.graph()))
              << '\n';
    return kOk;
}

int cmd_detect(const std::string& data_path, const std::string& bundle_path, const std::string& graph_path, const Overrides& o,
               const Common& c, PipelineConfig cfg) {
    apply(o, cfg);
    Manifest mf;
    mf.subcommand = "detect";
    mf.inputs = {{"data", data_path}, {"bundle", bundle_path}};
    const fs::path out(c.out);
    fs::create_directories(out);
    std::optional<MixedGraph> expected;
    if (!graph_path.empty()) {
        expected = load_graph(graph_path);
        mf.inputs["graph"] = graph_path;
    }
    const auto bundle = load_bundle(bundle_path, expected ? &*expected : nullptr);
    const auto raw = tail(load_data(data_path, cfg), o.split);
    mf.clock.lap("load");
    auto report = bundle.score(raw);
    const auto pool = report.scored_values();
    if (pool.empty()) throw SchemaError("no rows with enough history to score");
    const double lambda = cfg.detection.threshold ? *cfg.detection.threshold : threshold_from_percentile(pool, cfg.detection.percentile);
    report.relabel(lambda);
    mf.clock.lap("detect");
    auto csv = open_out(out / "detection.csv");
    write_report_csv(csv, report);
    auto prob = open_out(out / "probabilities.csv");
    write_probabilities_csv(prob, report);
    const json summary{{"threshold", lambda},
                       {"threshold_source", cfg.detection.threshold ? "explicit" : "percentile"},
                       {"percentile", cfg.detection.percentile},
                       {"rows", report.size()},
                       {"warmup_rows", std::count(report.warmup.begin(), report.warmup.end(), true)},
                       {"anomalies", report.positives()},
                       {"graph_hash", hash_hex(graph_hash(bundle.graph.graph()))}};
    open_out(out / "summary.json") << summary.dump(2) << '\n';
    mf.config = config_to_json(cfg);
    mf.seed = cfg.seed;
    mf.outputs = {"detection.csv", "probabilities.csv", "summary.json"};
    mf.write(out);
    std::cout << report.positives() << " of " << report.size() << " rows labeled anomalous (threshold "
              << causalad::detail::format_double(lambda) << ")\n";
    return kOk;
}

int cmd_rca(const std::string& detection_dir, const std::string& bundle_path, const Overrides& o, const Common& c,
            PipelineConfig cfg) {
    apply(o, cfg);
    Manifest mf;
    mf.subcommand = "rca";
    mf.inputs = {{"detection", detection_dir}, {"bundle", bundle_path}};
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto bundle = load_bundle(bundle_path);
    const auto& g = bundle.graph;
    if (cfg.rca.top_k > g.size()) throw ConfigError("top_k exceeds the number of variables");
    const auto det = read_table(fs::path(detection_dir) / "detection.csv");
    const auto prob = read_table(fs::path(detection_dir) / "probabilities.csv");
    std::vector<std::size_t> cols;
    for (const auto& n : g.names()) cols.push_back(prob.column(n));
    std::map<std::int64_t, std::size_t> row_of;
    const auto pts = prob.column("timestep");
    for (std::size_t r = 0; r < prob.rows.size(); ++r) row_of[to_int(prob.rows[r][pts])] = r;
    mf.clock.lap("load");

    std::vector<RcaResult> results;
    const auto ts = det.column("timestep"), lb = det.column("label");
    std::vector<double> m(g.size());
    for (const auto& r : det.rows) {
        if (to_int(r[lb]) != 1) continue;
        const auto step = to_int(r[ts]);
        auto it = row_of.find(step);
        if (it == row_of.end()) throw SchemaError("no probabilities for labeled timestep " + std::to_string(step));
        for (std::size_t i = 0; i < g.size(); ++i) m[i] = to_double(prob.rows[it->second][cols[i]]);
        results.push_back(analyze_row(step, m, g, cfg.rca.alpha, cfg.rca.top_k));
    }
    mf.clock.lap("rca");
    auto csv = open_out(out / "rca.csv");
    write_rca_csv(csv, results, g.names(), cfg.rca.top_k);
    mf.config = config_to_json(cfg);
    mf.seed = cfg.seed;
    mf.outputs = {"rca.csv"};
    mf.write(out);
    std::cout << "ranked root causes for " << results.size() << " anomalous rows\n";
    return kOk;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path, const std::string& rca_path, bool sweep,
                 const std::string& hr_k, const Common& c, const PipelineConfig& cfg) {
    Manifest mf;
    mf.subcommand = "evaluate";
    mf.inputs = {{"pred", pred_path}, {"truth", truth_path}};
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto pred = read_table(pred_path);
    const auto truth_all = read_truth(truth_path);
    const auto ts = pred.column("timestep"), sc = pred.column("score"), lb = pred.column("label");
    std::vector<std::int64_t> steps;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : pred.rows) {
        steps.push_back(to_int(r[ts]));
        scores.push_back(to_double(r[sc]));
        labels.push_back(to_int(r[lb]) != 0 ? 1 : 0);
    }
    const auto truth = align_truth(truth_all, steps);
    mf.clock.lap("load");

    eval::EvalReport report;
    report.at_threshold = eval::prf(eval::point_adjust(labels, truth), truth);
    if (sweep) report.sweep = eval::best_f1_sweep(scores, truth);
    json hit_ratios = json::object();

    if (!rca_path.empty()) {
        mf.inputs["rca"] = rca_path;
        const auto rca = read_table(rca_path);
        std::vector<std::size_t> rc_cols;
        for (std::size_t j = 0; j < rca.header.size(); ++j)
            if (rca.header[j].rfind("rc", 0) == 0) rc_cols.push_back(j);
        std::map<std::int64_t, std::vector<std::string>> ranking;
        for (const auto& r : rca.rows) {
            std::vector<std::string> names;
            for (auto j : rc_cols) names.push_back(r[j]);
            ranking[to_int(r[rca.column("timestep")])] = names;
        }
        const std::size_t kmax = rc_cols.size();
        std::vector<std::size_t> ks;
        for (const auto& k : split_list(hr_k, ',')) ks.push_back(static_cast<std::size_t>(std::stoul(k)));
        if (hr_k.empty())
            for (std::size_t k = 1; k <= kmax; ++k) ks.push_back(k);
        for (auto k : ks)
            if (k < 1 || k > kmax) throw ConfigError("--hr-k values must lie in [1, " + std::to_string(kmax) + "]");

        // Each truth segment is ranked at its highest-scoring labeled row; unlabeled segments miss.
        std::vector<std::set<std::size_t>> causes;
        std::vector<std::optional<std::vector<std::size_t>>> rankings;
        std::map<std::string, std::size_t> ids;
        auto id = [&](const std::string& n) { return ids.emplace(n, ids.size()).first->second; };
        for (const auto& seg : eval::segments(truth)) {
            std::set<std::size_t> cs;
            auto cit = truth_all.causes.find(steps[seg.begin]);
            if (cit != truth_all.causes.end())
                for (const auto& n : cit->second) cs.insert(id(n));
            causes.push_back(cs);
            std::optional<std::size_t> best;
            for (auto t = seg.begin; t < seg.end; ++t)
                if (labels[t] == 1 && ranking.count(steps[t]) && (!best || scores[t] > scores[*best])) best = t;
            if (best) {
                std::vector<std::size_t> r;
                for (const auto& n : ranking.at(steps[*best])) r.push_back(id(n));
                rankings.push_back(r);
            } else {
                rankings.push_back(std::nullopt);
            }
        }
        for (auto k : ks) hit_ratios["HR@" + std::to_string(k)] = eval::hit_ratio_at_k(rankings, causes, k);
    }
    mf.clock.lap("evaluate");
    json j = eval::to_json(report);
    if (!rca_path.empty()) j["hit_ratio"] = hit_ratios;
    open_out(out / "eval.json") << j.dump(2) << '\n';
    auto csv = open_out(out / "eval.csv");
    csv << "metric,value\n";
    auto row = [&](const std::string& name, double v) { csv << name << ',' << causalad::detail::format_double(v) << '\n'; };
    row("precision", report.at_threshold.precision);
    row("recall", report.at_threshold.recall);
    row("f1", report.at_threshold.f1);
    if (report.sweep) {
        row("best_precision", report.sweep->best.precision);
        row("best_recall", report.sweep->best.recall);
        row("best_f1", report.sweep->best.f1);
        row("best_threshold", report.sweep->threshold);
    }
    for (const auto& [k, v] : hit_ratios.items()) row(k, v.get<double>());
    mf.config = config_to_json(cfg);
    mf.seed = cfg.seed;
    mf.outputs = {"eval.json", "eval.csv"};
    mf.write(out);
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_sweep(const std::string& data_path, const std::string& truth_path, const std::string& parameter,
              const std::string& values, const Overrides& o, const Common& c, PipelineConfig cfg) {
    apply(o, cfg);
    cfg.threads = c.threads;
    Manifest mf;
    mf.subcommand = "sweep";
    mf.inputs = {{"data", data_path}, {"truth", truth_path}};
    const fs::path out(c.out);
    fs::create_directories(out);
    const auto all = load_data(data_path, cfg);
    const auto [train_raw, test_raw] = train_test_split(all, cfg.split);
    std::vector<std::int64_t> steps;
    for (std::size_t t = 0; t < test_raw.rows(); ++t) steps.push_back(test_raw.start_index() + static_cast<std::int64_t>(t));
    const auto truth = align_truth(read_truth(truth_path), steps);
    mf.clock.lap("load");
    auto csv = open_out(out / "sweep.csv");
    csv << "parameter,value,edges,precision,recall,f1\n";
    for (const auto& v : split_list(values, ',')) {
        auto run = cfg;
        if (parameter == "max_degree")
            run.discovery.max_degree = static_cast<std::size_t>(std::stoul(v));
        else if (parameter == "penalty_discount")
            run.discovery.penalty_discount = std::stod(v);
        else if (parameter == "alpha")
            run.discovery.alpha = std::stod(v);
        else if (parameter == "rca_alpha")
            run.rca.alpha = std::stod(v);
        else
            throw ConfigError("unknown sweep parameter '" + parameter + "'");
        run.validate();
        const auto bundle = train(train_raw, run, std::nullopt);
        const auto rep = bundle.score(test_raw);
        const auto best = eval::best_f1_sweep(rep.scores, truth);
        csv << parameter << ',' << v << ',' << bundle.graph.graph().num_edges() << ',' << best.best.precision << ','
            << best.best.recall << ',' << best.best.f1 << '\n';
        mf.clock.lap(parameter + "=" + v);
        std::cout << parameter << '=' << v << " best F1 " << best.best.f1 << '\n';
    }
    mf.config = config_to_json(cfg);
    mf.seed = cfg.seed;
    mf.outputs = {"sweep.csv"};
    mf.write(out);
    return kOk;
}

/// Reshapes run artifacts into tidy (series, x, y) tables.
int cmd_report(const std::string& run_dir, const Common& c) {
    Manifest mf;
    mf.subcommand = "report";
    mf.inputs["run"] = run_dir;
    if (!fs::is_directory(run_dir)) throw Error("run directory '" + run_dir + "' does not exist");
    const fs::path out(c.out);
    std::vector<fs::path> retrain, sweeps;
    for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().filename() == "retrain.csv") retrain.push_back(e.path());
        if (e.path().filename() == "sweep.csv") sweeps.push_back(e.path());
    }
    if (retrain.empty() && sweeps.empty()) throw Error("no retrain.csv or sweep.csv found under '" + run_dir + "'");
    std::sort(retrain.begin(), retrain.end());
    std::sort(sweeps.begin(), sweeps.end());
    fs::create_directories(out);
    if (!retrain.empty()) {
        auto f1 = open_out(out / "f1_vs_iteration.csv");
        auto diff = open_out(out / "adjacency_difference_vs_iteration.csv");
        f1 << "series,iteration,f1\n";
        diff << "series,iteration,adjacency_difference\n";
        for (const auto& p : retrain) {
            const auto t = read_table(p);
            const auto series = fs::relative(p.parent_path(), run_dir).string();
            const auto it = t.column("iteration"), ad = t.column("adjacency_difference");
            std::optional<std::size_t> fc;
            for (std::size_t j = 0; j < t.header.size(); ++j)
                if (t.header[j] == "f1") fc = j;
            for (const auto& r : t.rows) {
                if (fc) f1 << series << ',' << r[it] << ',' << r[*fc] << '\n';
                if (!r[ad].empty()) diff << series << ',' << r[it] << ',' << r[ad] << '\n';
            }
        }
        mf.outputs.push_back("f1_vs_iteration.csv");
        mf.outputs.push_back("adjacency_difference_vs_iteration.csv");
    }
    if (!sweeps.empty()) {
        auto m = open_out(out / "metric_vs_parameter.csv");
        m << "series,parameter,value,precision,recall,f1\n";
        for (const auto& p : sweeps) {
            const auto t = read_table(p);
            const auto series = fs::relative(p.parent_path(), run_dir).string();
            for (const auto& r : t.rows)
                m << series << ',' << r[t.column("parameter")] << ',' << r[t.column("value")] << ',' << r[t.column("precision")]
                  << ',' << r[t.column("recall")] << ',' << r[t.column("f1")] << '\n';
        }
        mf.outputs.push_back("metric_vs_parameter.csv");
    }
    mf.clock.lap("report");
    mf.write(out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal anomaly detection and root-cause analysis for multivariate time series", "causalad"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (the CAUSALAD_CONFIG environment variable takes precedence)");

    Common common;
    Overrides o;
    std::string spec_path, data_path, graph_path, bundle_path, truth_path, pred_path, rca_path, detection_dir, run_dir;
    std::string hr_k, parameter, values;
    bool sweep_flag = false;

    auto* simulate = app.add_subcommand("simulate", "Generate a labeled synthetic dataset");
    simulate->add_option("--spec", spec_path, "Simulation spec (JSON); defaults when omitted")->check(CLI::ExistingFile);
    simulate->add_option("--seed", o.seed, "Override the simulation seed");
    add_common(simulate, common);

    auto* discover = app.add_subcommand("discover", "Learn a causal graph from a CSV file");
    discover->add_option("--data", data_path, "Input CSV")->required()->check(CLI::ExistingFile);
    discover->add_option("--split", o.split, "Use only the first fraction of rows");
    add_discovery_flags(discover, o);
    add_common(discover, common);

    auto* trainc = app.add_subcommand("train", "Fit per-variable models (discovering the graph unless one is given)");
    trainc->add_option("--data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);
    trainc->add_option("--graph", graph_path, "Graph file to use instead of discovery")->check(CLI::ExistingFile);
    trainc->add_option("--split", o.split, "Train on the first fraction of rows");
    add_model_flags(trainc, o);
    trainc->add_option("--retrain-iterations", o.retrain_iterations, "Iterative retraining rounds (0 disables; default from config)");
    trainc->add_option("--removal-fraction", o.removal_fraction, "Fraction of rows removed per retraining round (default 0.03)");
    trainc->add_option("--truth", truth_path, "Labels CSV; with --split and retraining, records held-out F1 per iteration")
        ->check(CLI::ExistingFile);
    add_discovery_flags(trainc, o);
    add_common(trainc, common);

    auto* detect = app.add_subcommand("detect", "Score a CSV file with a trained bundle");
    detect->add_option("--data", data_path, "CSV to score")->required()->check(CLI::ExistingFile);
    detect->add_option("--bundle", bundle_path, "Directory written by train")->required()->check(CLI::ExistingDirectory);
    detect->add_option("--graph", graph_path, "Graph the bundle must have been trained on")->check(CLI::ExistingFile);
    detect->add_option("--split", o.split, "Score only the rows after this fraction");
    detect->add_option("--percentile", o.percentile, "Threshold percentile of the scored rows (default 95)");
    detect->add_option("--threshold", o.threshold, "Explicit threshold, overriding the percentile");
    add_common(detect, common);

    auto* rca = app.add_subcommand("rca", "Rank root causes for the anomalous rows of a detection run");
    rca->add_option("--detection", detection_dir, "Directory written by detect")->required()->check(CLI::ExistingDirectory);
    rca->add_option("--bundle", bundle_path, "Directory written by train")->required()->check(CLI::ExistingDirectory);
    rca->add_option("--alpha", o.rca_alpha, "Propagation weight in [0, 1) (default 0.5)");
    rca->add_option("--top-k", o.top_k, "Number of root causes reported per row (default 3)");
    add_common(rca, common);

    auto* evaluate = app.add_subcommand("evaluate", "Point-adjusted detection metrics and root-cause hit ratios");
    evaluate->add_option("--pred", pred_path, "detection.csv written by detect")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--truth", truth_path, "labels.csv with timestep,label[,root_causes]")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--rca", rca_path, "rca.csv written by rca, for hit ratios")->check(CLI::ExistingFile);
    evaluate->add_flag("--sweep", sweep_flag, "Also report the best F1 over all thresholds");
    evaluate->add_option("--hr-k", hr_k, "Comma-separated k values for HR@k (default 1..columns in rca.csv)");
    add_common(evaluate, common);

    auto* sweep = app.add_subcommand("sweep", "Best F1 across values of one discovery or RCA parameter");
    sweep->add_option("--data", data_path, "Labeled CSV, split into train and test")->required()->check(CLI::ExistingFile);
    sweep->add_option("--truth", truth_path, "labels.csv for the same rows")->required()->check(CLI::ExistingFile);
    sweep->add_option("--parameter", parameter, "max_degree, penalty_discount, alpha or rca_alpha")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--split", o.split, "Training fraction (default from config, 0.5)");
    add_discovery_flags(sweep, o);
    add_model_flags(sweep, o);
    add_common(sweep, common);

    auto* report = app.add_subcommand("report", "Collect plot-ready CSVs from a run directory");
    report->add_option("--run", run_dir, "Directory holding retrain.csv or sweep.csv files")->required();
    add_common(report, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        PipelineConfig cfg = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
        cfg.threads = common.threads;
        if (simulate->parsed()) return cmd_simulate(spec_path, o.seed, common);
        if (discover->parsed()) return cmd_discover(data_path, o, common, cfg);
        if (trainc->parsed()) return cmd_train(data_path, graph_path, truth_path, o, common, cfg);
        if (detect->parsed()) return cmd_detect(data_path, bundle_path, graph_path, o, common, cfg);
        if (rca->parsed()) return cmd_rca(detection_dir, bundle_path, o, common, cfg);
        if (evaluate->parsed()) return cmd_evaluate(pred_path, truth_path, rca_path, sweep_flag, hr_k, common, cfg);
        if (sweep->parsed()) return cmd_sweep(data_path, truth_path, parameter, values, o, common, cfg);
        if (report->parsed()) return cmd_report(run_dir, common);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
