#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "causalad/error.hpp"
#include "causalad/random.hpp"

namespace causalad {

struct DirectedEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    int lag = 0;
    bool operator==(const DirectedEdge&) const = default;
};

struct UndirectedEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    bool operator==(const UndirectedEdge&) const = default;
};

/// Graph over named variables with directed (optionally lagged) and undirected edges.
///
/// At most one directed edge per ordered pair; a pair joined by an undirected edge carries no
/// contemporaneous directed edge in either direction. Lag 0 means contemporaneous.
class MixedGraph {
public:
    MixedGraph() = default;
    explicit MixedGraph(std::vector<std::string> names)
        : names_(std::move(names)), lag_(names_.size() * names_.size(), kNone), undirected_(names_.size() * names_.size(), 0) {}

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }

    std::optional<std::size_t> index_of(std::string_view name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }

    void add_directed(std::size_t from, std::size_t to, int lag = 0) {
        check_pair(from, to);
        if (lag < 0) throw StructuralError("negative lag on edge " + name(from) + " -> " + name(to));
        if (lag == 0) {
            if (has_undirected(from, to)) set_undirected(from, to, false);
            if (lag_at(to, from) == 0) lag_at(to, from) = kNone;
        }
        lag_at(from, to) = lag;
    }

    void add_undirected(std::size_t a, std::size_t b) {
        check_pair(a, b);
        if (lag_at(a, b) == 0) lag_at(a, b) = kNone;
        if (lag_at(b, a) == 0) lag_at(b, a) = kNone;
        set_undirected(a, b, true);
    }

    /// Removes every edge between a and b, at any lag.
    void remove_edge(std::size_t a, std::size_t b) {
        lag_at(a, b) = kNone;
        lag_at(b, a) = kNone;
        set_undirected(a, b, false);
    }

    /// Turns an undirected or reversed contemporaneous edge into from -> to.
    void orient(std::size_t from, std::size_t to) { add_directed(from, to, 0); }

    std::optional<int> lag(std::size_t from, std::size_t to) const {
        const int l = lag_at(from, to);
        if (l == kNone) return std::nullopt;
        return l;
    }

    /// Contemporaneous directed edge from -> to.
    bool has_directed(std::size_t from, std::size_t to) const { return lag_at(from, to) == 0; }
    bool has_directed_any_lag(std::size_t from, std::size_t to) const { return lag_at(from, to) != kNone; }
    bool has_undirected(std::size_t a, std::size_t b) const { return undirected_[a * size() + b] != 0; }

    /// Contemporaneous adjacency.
    bool adjacent(std::size_t a, std::size_t b) const {
        return has_undirected(a, b) || has_directed(a, b) || has_directed(b, a);
    }

    std::vector<std::size_t> adjacents(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (j != i && adjacent(i, j)) out.push_back(j);
        return out;
    }

    /// Undirected neighbours of i.
    std::vector<std::size_t> neighbors(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (j != i && has_undirected(i, j)) out.push_back(j);
        return out;
    }

    /// Contemporaneous directed parents of i.
    std::vector<std::size_t> directed_parents(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (has_directed(j, i)) out.push_back(j);
        return out;
    }

    std::vector<std::size_t> directed_children(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (has_directed(i, j)) out.push_back(j);
        return out;
    }

    std::vector<DirectedEdge> directed_edges() const {
        std::vector<DirectedEdge> out;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < size(); ++j)
                if (lag_at(i, j) != kNone) out.push_back({i, j, lag_at(i, j)});
        return out;
    }

    std::vector<UndirectedEdge> undirected_edges() const {
        std::vector<UndirectedEdge> out;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                if (has_undirected(i, j)) out.push_back({i, j});
        return out;
    }

    std::size_t num_edges() const { return directed_edges().size() + undirected_edges().size(); }

    /// Number of contemporaneous adjacencies of node i.
    std::size_t degree(std::size_t i) const { return adjacents(i).size(); }

    bool operator==(const MixedGraph& o) const {
        return names_ == o.names_ && lag_ == o.lag_ && undirected_ == o.undirected_;
    }

private:
    static constexpr int kNone = -1;

    int& lag_at(std::size_t i, std::size_t j) { return lag_[i * size() + j]; }
    int lag_at(std::size_t i, std::size_t j) const { return lag_[i * size() + j]; }

    void set_undirected(std::size_t a, std::size_t b, bool v) {
        undirected_[a * size() + b] = v;
        undirected_[b * size() + a] = v;
    }

    void check_pair(std::size_t a, std::size_t b) const {
        if (a >= size() || b >= size()) throw StructuralError("node index out of range");
        if (a == b) throw StructuralError("self-loop on " + name(a));
    }

    std::vector<std::string> names_;
    std::vector<int> lag_;
    std::vector<std::uint8_t> undirected_;
};

/// Topological order over contemporaneous directed edges, lowest index first among ready nodes.
/// Returns nullopt when those edges contain a cycle. Undirected edges are ignored.
inline std::optional<std::vector<std::size_t>> topological_order(const MixedGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (g.has_directed(i, j)) ++indegree[j];
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        const auto i = ready.top();
        ready.pop();
        order.push_back(i);
        for (std::size_t j = 0; j < n; ++j)
            if (g.has_directed(i, j) && --indegree[j] == 0) ready.push(j);
    }
    if (order.size() != n) return std::nullopt;
    return order;
}

struct Parent {
    std::size_t index = 0;
    int lag = 0;
    bool operator==(const Parent&) const = default;
};

/// Directed graph acyclic over its contemporaneous edges.
class Dag {
public:
    Dag() = default;

    explicit Dag(MixedGraph g) : g_(std::move(g)) {
        if (!g_.undirected_edges().empty()) throw StructuralError("a DAG cannot contain undirected edges");
        auto order = causalad::topological_order(g_);
        if (!order) throw StructuralError("graph has a contemporaneous cycle");
        order_ = std::move(*order);
    }

    /// Empty graph over the given variables.
    static Dag empty(std::vector<std::string> names) { return Dag(MixedGraph(std::move(names))); }

    const MixedGraph& graph() const { return g_; }
    std::size_t size() const { return g_.size(); }
    const std::vector<std::string>& names() const { return g_.names(); }

    /// Parents at every lag, ordered by index.
    std::vector<Parent> parents(std::size_t i) const {
        std::vector<Parent> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (auto l = g_.lag(j, i)) out.push_back({j, *l});
        return out;
    }

    /// Children at every lag, ordered by index.
    std::vector<std::size_t> children(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (g_.has_directed_any_lag(i, j)) out.push_back(j);
        return out;
    }

    bool has_parents(std::size_t i) const { return !parents(i).empty(); }

    /// Nodes with no contemporaneous parents.
    std::vector<std::size_t> roots() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < size(); ++i)
            if (g_.directed_parents(i).empty()) out.push_back(i);
        return out;
    }

    const std::vector<std::size_t>& topological_order() const { return order_; }

    bool operator==(const Dag& o) const { return g_ == o.g_; }

private:
    MixedGraph g_;
    std::vector<std::size_t> order_;
};

/// Number of entries that differ between the directed adjacency matrices (lags ignored).
inline std::size_t adjacency_difference(const MixedGraph& a, const MixedGraph& b) {
    if (a.size() != b.size()) throw ArgumentError("graphs differ in size");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) {
            const bool ea = a.has_directed_any_lag(i, j) || a.has_undirected(i, j);
            const bool eb = b.has_directed_any_lag(i, j) || b.has_undirected(i, j);
            diff += ea != eb;
        }
    return diff;
}

/// Structural Hamming distance over contemporaneous edge marks: each unordered pair whose
/// edge differs (missing, extra, or differently oriented) counts once.
inline std::size_t structural_hamming_distance(const MixedGraph& a, const MixedGraph& b) {
    if (a.size() != b.size()) throw ArgumentError("graphs differ in size");
    auto mark = [](const MixedGraph& g, std::size_t i, std::size_t j) {
        if (g.has_undirected(i, j)) return 1;
        if (g.has_directed(i, j)) return 2;
        if (g.has_directed(j, i)) return 3;
        return 0;
    };
    std::size_t shd = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) shd += mark(a, i, j) != mark(b, i, j);
    return shd;
}

// ---------------------------------------------------------------------------
// Text serialization
//
//   # comment
//   node <name>
//   <src> -> <dst> [lag=<tau>]
//   <a> -- <b>

inline std::string serialize_graph(const MixedGraph& g) {
    std::ostringstream out;
    out << "# causalad graph v1\n";
    for (const auto& n : g.names()) out << "node " << n << '\n';
    for (const auto& e : g.directed_edges()) {
        out << g.name(e.from) << " -> " << g.name(e.to);
        if (e.lag > 0) out << " [lag=" << e.lag << ']';
        out << '\n';
    }
    for (const auto& e : g.undirected_edges()) out << g.name(e.a) << " -- " << g.name(e.b) << '\n';
    return out.str();
}

inline MixedGraph parse_graph(std::string_view text) {
    std::vector<std::string> names;
    struct Pending {
        std::string a, b;
        bool directed;
        int lag;
        std::size_t line;
    };
    std::vector<Pending> edges;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw ParseError("graph line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;
        if (line.starts_with("node ")) {
            names.emplace_back(line.substr(5));
            continue;
        }
        int lag = 0;
        if (auto br = line.rfind(" [lag="); br != std::string_view::npos) {
            if (line.back() != ']') fail("unterminated lag annotation");
            const auto num = line.substr(br + 6, line.size() - br - 7);
            try {
                std::size_t used = 0;
                lag = std::stoi(std::string(num), &used);
                if (used != num.size()) fail("bad lag '" + std::string(num) + "'");
            } catch (const std::logic_error&) {
                fail("bad lag '" + std::string(num) + "'");
            }
            if (lag < 0) fail("negative lag");
            line = line.substr(0, br);
        }
        if (auto p = line.find(" -> "); p != std::string_view::npos) {
            edges.push_back({std::string(line.substr(0, p)), std::string(line.substr(p + 4)), true, lag, line_no});
        } else if (auto q = line.find(" -- "); q != std::string_view::npos) {
            if (lag != 0) fail("undirected edges cannot carry a lag");
            edges.push_back({std::string(line.substr(0, q)), std::string(line.substr(q + 4)), false, 0, line_no});
        } else {
            fail("unrecognised line '" + std::string(line) + "'");
        }
    }
    MixedGraph g(names);
    if (std::set<std::string>(names.begin(), names.end()).size() != names.size())
        throw ParseError("graph declares a node twice");
    for (const auto& e : edges) {
        line_no = e.line;
        auto a = g.index_of(e.a);
        auto b = g.index_of(e.b);
        if (!a) fail("unknown node '" + e.a + "'");
        if (!b) fail("unknown node '" + e.b + "'");
        if (*a == *b) fail("self-loop on '" + e.a + "'");
        if (e.directed)
            g.add_directed(*a, *b, e.lag);
        else
            g.add_undirected(*a, *b);
    }
    return g;
}

inline std::uint64_t graph_hash(const MixedGraph& g) { return fnv1a(serialize_graph(g)); }

inline std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

inline void save_graph(const std::filesystem::path& path, const MixedGraph& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize_graph(g);
}

inline MixedGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_graph(buf.str());
}

}  // namespace causalad
