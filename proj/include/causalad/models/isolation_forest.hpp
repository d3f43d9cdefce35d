#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/random.hpp"

namespace causalad::models {

inline double harmonic_number(std::size_t i) {
    if (i <= 1000) {
        double h = 0.0;
        for (std::size_t k = 1; k <= i; ++k) h += 1.0 / static_cast<double>(k);
        return h;
    }
    const auto x = static_cast<double>(i);
    return std::log(x) + std::numbers::egamma + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
}

/// Average path length of an unsuccessful binary-search-tree lookup among n points.
inline double average_path_length(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    const auto x = static_cast<double>(n);
    return 2.0 * harmonic_number(n - 1) - 2.0 * (x - 1.0) / x;
}

struct IsolationForestConfig {
    std::size_t trees = 100;
    std::size_t max_samples = 10000;
};

/// Isolation forest over row vectors (columns of the input matrix are samples).
struct IsolationForest {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double split = 0.0;
        int left = -1;
        int right = -1;
        std::size_t size = 0;
    };

    std::vector<std::vector<Node>> trees;
    std::size_t sample_size = 0;
    std::size_t dimension = 0;

    static IsolationForest fit(const Eigen::MatrixXd& x, const IsolationForestConfig& cfg, std::uint64_t seed) {
        if (cfg.trees == 0 || cfg.max_samples < 2) throw ArgumentError("isolation forest needs trees >= 1 and max_samples >= 2");
        const auto n = static_cast<std::size_t>(x.cols());
        if (n < 2) throw ArgumentError("isolation forest needs at least 2 samples");
        Rng rng(seed);
        IsolationForest f;
        f.dimension = static_cast<std::size_t>(x.rows());
        f.sample_size = std::min(cfg.max_samples, n);
        const auto height_limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(f.sample_size))));
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        for (std::size_t t = 0; t < cfg.trees; ++t) {
            std::vector<std::size_t> sample;
            sample.reserve(f.sample_size);
            std::sample(all.begin(), all.end(), std::back_inserter(sample), f.sample_size, rng);
            std::vector<Node> nodes;
            grow(x, sample, 0, height_limit, rng, nodes);
            f.trees.push_back(std::move(nodes));
        }
        return f;
    }

    double path_length(const Eigen::Ref<const Eigen::VectorXd>& p, const std::vector<Node>& nodes) const {
        int at = 0;
        double depth = 0.0;
        while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& node = nodes[static_cast<std::size_t>(at)];
            at = p(node.feature) < node.split ? node.left : node.right;
            depth += 1.0;
        }
        return depth + average_path_length(nodes[static_cast<std::size_t>(at)].size);
    }

    /// s(p) = 2^(-E[h(p)] / c(psi)), in (0, 1]; larger is more anomalous.
    Eigen::RowVectorXd raw_score(const Eigen::MatrixXd& x) const {
        if (static_cast<std::size_t>(x.rows()) != dimension) throw ArgumentError("isolation forest input has the wrong dimension");
        const double norm = average_path_length(sample_size);
        Eigen::RowVectorXd out(x.cols());
        for (Eigen::Index k = 0; k < x.cols(); ++k) {
            double total = 0.0;
            for (const auto& t : trees) total += path_length(x.col(k), t);
            const double mean = total / static_cast<double>(trees.size());
            out(k) = norm > 0.0 ? std::exp2(-mean / norm) : 1.0;
        }
        return out;
    }

private:
    static int grow(const Eigen::MatrixXd& x, std::vector<std::size_t>& idx, std::size_t depth, std::size_t limit, Rng& rng,
                    std::vector<Node>& nodes) {
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(Node{-1, 0.0, -1, -1, idx.size()});
        if (depth >= limit || idx.size() <= 1) return id;

        std::vector<std::pair<int, std::pair<double, double>>> candidates;
        for (Eigen::Index f = 0; f < x.rows(); ++f) {
            double lo = x(f, static_cast<Eigen::Index>(idx[0])), hi = lo;
            for (auto i : idx) {
                lo = std::min(lo, x(f, static_cast<Eigen::Index>(i)));
                hi = std::max(hi, x(f, static_cast<Eigen::Index>(i)));
            }
            if (hi > lo) candidates.push_back({static_cast<int>(f), {lo, hi}});
        }
        if (candidates.empty()) return id;
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const auto& [feature, range] = candidates[pick(rng)];
        std::uniform_real_distribution<double> cut(range.first, range.second);
        double split = cut(rng);
        if (split <= range.first) split = std::nextafter(range.first, range.second);

        std::vector<std::size_t> left, right;
        for (auto i : idx) (x(feature, static_cast<Eigen::Index>(i)) < split ? left : right).push_back(i);
        nodes[static_cast<std::size_t>(id)].feature = feature;
        nodes[static_cast<std::size_t>(id)].split = split;
        const int l = grow(x, left, depth + 1, limit, rng, nodes);
        const int r = grow(x, right, depth + 1, limit, rng, nodes);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

inline void to_json(nlohmann::json& j, const IsolationForest& f) {
    j = nlohmann::json{{"sample_size", f.sample_size}, {"dimension", f.dimension}};
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& t : f.trees) {
        nlohmann::json feature = nlohmann::json::array(), split = nlohmann::json::array(), left = nlohmann::json::array(),
                       right = nlohmann::json::array(), size = nlohmann::json::array();
        for (const auto& n : t) {
            feature.push_back(n.feature);
            split.push_back(n.split);
            left.push_back(n.left);
            right.push_back(n.right);
            size.push_back(n.size);
        }
        trees.push_back({{"feature", feature}, {"split", split}, {"left", left}, {"right", right}, {"size", size}});
    }
}

inline void from_json(const nlohmann::json& j, IsolationForest& f) {
    f.sample_size = j.at("sample_size").get<std::size_t>();
    f.dimension = j.at("dimension").get<std::size_t>();
    f.trees.clear();
    for (const auto& t : j.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto split = t.at("split").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto size = t.at("size").get<std::vector<std::size_t>>();
        const auto n = feature.size();
        if (split.size() != n || left.size() != n || right.size() != n || size.size() != n || n == 0)
            throw ParseError("malformed isolation tree");
        std::vector<IsolationForest::Node> nodes(n);
        for (std::size_t k = 0; k < n; ++k) {
            nodes[k] = {feature[k], split[k], left[k], right[k], size[k]};
            if (feature[k] >= 0 && (left[k] <= static_cast<int>(k) || right[k] <= static_cast<int>(k) ||
                                    left[k] >= static_cast<int>(n) || right[k] >= static_cast<int>(n) ||
                                    static_cast<std::size_t>(feature[k]) >= f.dimension))
                throw ParseError("malformed isolation tree");
        }
        f.trees.push_back(std::move(nodes));
    }
}

}  // namespace causalad::models
