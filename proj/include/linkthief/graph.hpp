#ifndef LINKTHIEF_GRAPH_HPP
#define LINKTHIEF_GRAPH_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linkthief/rng.hpp"

namespace linkthief {

using Edge = std::pair<int, int>;
using EdgeList = std::vector<Edge>;

/// Undirected simple graph with dense node features and optional class labels.
/// Node ids are contiguous 0-based; `node_ids` maps back to the ids seen in
/// input files (identity for generated graphs). Edges are stored canonically:
/// u < v, sorted, deduplicated, no self loops.
struct Graph {
    int num_nodes = 0;
    EdgeList edges;
    Eigen::MatrixXd features;            // num_nodes x d
    std::vector<int> labels;             // empty when absent
    std::vector<long long> node_ids;     // original ids, size num_nodes
    bool labels_synthesized = false;

    bool has_labels() const { return !labels.empty(); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
    int num_classes() const {
        int c = 0;
        for (int l : labels) c = std::max(c, l + 1);
        return c;
    }
};

/// Normalize an edge list in place: undirected orientation u < v, self loops
/// dropped, duplicates merged, sorted lexicographically.
inline EdgeList canonical_edges(EdgeList edges) {
    EdgeList out;
    out.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        out.emplace_back(u, v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<std::vector<int>> adjacency_list(int num_nodes, const EdgeList& edges) {
    std::vector<std::vector<int>> adj(num_nodes);
    for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    return adj;
}

namespace detail {

inline std::runtime_error parse_error(const std::string& path, int line, const std::string& what) {
    return std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline bool comment_or_blank(const std::string& s) {
    for (char c : s) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

} // namespace detail

/// Parse an edge-list file: one "u v" pair per line, '#' starts a comment.
/// Raw ids are remapped to contiguous 0-based ids in ascending raw-id order.
inline Graph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);

    std::vector<std::pair<long long, long long>> raw;
    std::set<long long> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (detail::comment_or_blank(line)) continue;
        std::istringstream ss(line);
        long long u, v;
        if (!(ss >> u >> v)) throw detail::parse_error(path, lineno, "expected two node ids");
        std::string rest;
        if (ss >> rest) throw detail::parse_error(path, lineno, "trailing tokens after edge");
        raw.emplace_back(u, v);
        ids.insert(u);
        ids.insert(v);
    }

    Graph g;
    g.node_ids.assign(ids.begin(), ids.end());
    g.num_nodes = static_cast<int>(g.node_ids.size());
    std::map<long long, int> remap;
    for (int i = 0; i < g.num_nodes; ++i) remap[g.node_ids[i]] = i;

    EdgeList edges;
    edges.reserve(raw.size());
    for (auto [u, v] : raw) edges.emplace_back(remap[u], remap[v]);
    g.edges = canonical_edges(std::move(edges));
    return g;
}

/// Canonical serialization: sorted "u v" lines using original node ids.
inline void save_edge_list(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write edge list: " + path);
    for (auto [u, v] : g.edges) {
        long long a = g.node_ids.empty() ? u : g.node_ids[u];
        long long b = g.node_ids.empty() ? v : g.node_ids[v];
        out << a << " " << b << "\n";
    }
}

/// Compact away nodes that touch no edge. Edge-list files cannot express
/// isolated vertices, so graphs headed for disk go through this first;
/// surviving nodes keep their original ids via node_ids.
inline Graph drop_isolated_nodes(const Graph& g) {
    std::vector<char> keep(g.num_nodes, 0);
    for (auto [u, v] : g.edges) keep[u] = keep[v] = 1;
    std::vector<int> remap(g.num_nodes, -1);
    Graph out;
    for (int v = 0; v < g.num_nodes; ++v)
        if (keep[v]) remap[v] = out.num_nodes++;
    out.edges.reserve(g.edges.size());
    for (auto [u, v] : g.edges) out.edges.emplace_back(remap[u], remap[v]);
    if (g.features.size() > 0) out.features.resize(out.num_nodes, g.features.cols());
    if (!g.labels.empty()) out.labels.resize(out.num_nodes);
    out.node_ids.resize(out.num_nodes);
    out.labels_synthesized = g.labels_synthesized;
    for (int v = 0; v < g.num_nodes; ++v) {
        if (remap[v] < 0) continue;
        if (g.features.size() > 0) out.features.row(remap[v]) = g.features.row(v);
        if (!g.labels.empty()) out.labels[remap[v]] = g.labels[v];
        out.node_ids[remap[v]] = g.node_ids.empty() ? v : g.node_ids[v];
    }
    return out;
}

/// Load "node_id,f0,...,f{d-1}" rows. Every graph node must be covered and no
/// unknown ids may appear.
inline void load_features_csv(Graph& g, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature file: " + path);
    std::map<long long, int> remap;
    for (int i = 0; i < g.num_nodes; ++i) remap[g.node_ids[i]] = i;

    std::string line;
    int lineno = 0;
    int dim = -1;
    std::vector<bool> seen(g.num_nodes, false);
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::comment_or_blank(line)) continue;
        if (lineno == 1 && line.rfind("node_id", 0) == 0) continue;
        std::istringstream ss(line);
        std::string cell;
        if (!std::getline(ss, cell, ',')) throw detail::parse_error(path, lineno, "empty row");
        long long raw_id;
        try {
            raw_id = std::stoll(cell);
        } catch (...) {
            throw detail::parse_error(path, lineno, "bad node id '" + cell + "'");
        }
        auto it = remap.find(raw_id);
        if (it == remap.end())
            throw detail::parse_error(path, lineno,
                                      "feature row for unknown node id " + std::to_string(raw_id));
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (...) {
                throw detail::parse_error(path, lineno, "bad feature value '" + cell + "'");
            }
        }
        if (vals.empty()) throw detail::parse_error(path, lineno, "row has no feature values");
        if (dim < 0) {
            dim = static_cast<int>(vals.size());
            g.features.resize(g.num_nodes, dim);
        } else if (static_cast<int>(vals.size()) != dim) {
            throw detail::parse_error(path, lineno, "inconsistent feature width");
        }
        for (int j = 0; j < dim; ++j) g.features(it->second, j) = vals[j];
        seen[it->second] = true;
    }
    for (int i = 0; i < g.num_nodes; ++i)
        if (!seen[i])
            throw std::runtime_error(path + ": missing features for node id " +
                                     std::to_string(g.node_ids[i]));
}

inline void save_features_csv(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write feature file: " + path);
    out << "node_id";
    for (int j = 0; j < g.feature_dim(); ++j) out << ",f" << j;
    out << "\n";
    out.precision(17);
    for (int i = 0; i < g.num_nodes; ++i) {
        out << (g.node_ids.empty() ? i : g.node_ids[i]);
        for (int j = 0; j < g.feature_dim(); ++j) out << "," << g.features(i, j);
        out << "\n";
    }
}

/// Load "node_id,label" rows; full coverage required.
inline void load_labels_csv(Graph& g, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label file: " + path);
    std::map<long long, int> remap;
    for (int i = 0; i < g.num_nodes; ++i) remap[g.node_ids[i]] = i;

    g.labels.assign(g.num_nodes, -1);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::comment_or_blank(line)) continue;
        if (lineno == 1 && line.rfind("node_id", 0) == 0) continue;
        std::istringstream ss(line);
        std::string idc, lc;
        if (!std::getline(ss, idc, ',') || !std::getline(ss, lc, ','))
            throw detail::parse_error(path, lineno, "expected node_id,label");
        long long raw_id;
        int label;
        try {
            raw_id = std::stoll(idc);
            label = std::stoi(lc);
        } catch (...) {
            throw detail::parse_error(path, lineno, "bad id or label");
        }
        auto it = remap.find(raw_id);
        if (it == remap.end())
            throw detail::parse_error(path, lineno,
                                      "label row for unknown node id " + std::to_string(raw_id));
        if (label < 0) throw detail::parse_error(path, lineno, "labels must be non-negative");
        g.labels[it->second] = label;
    }
    for (int i = 0; i < g.num_nodes; ++i)
        if (g.labels[i] < 0)
            throw std::runtime_error(path + ": missing label for node id " +
                                     std::to_string(g.node_ids[i]));
    g.labels_synthesized = false;
}

inline void save_labels_csv(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write label file: " + path);
    out << "node_id,label\n";
    for (int i = 0; i < g.num_nodes; ++i)
        out << (g.node_ids.empty() ? i : g.node_ids[i]) << "," << g.labels[i] << "\n";
}

/// Fallback features when no feature file is given: one-hot log2 degree
/// buckets, bucket = min(floor(log2(deg + 1)), 7), width 8.
inline void assign_degree_bucket_features(Graph& g) {
    constexpr int kBuckets = 8;
    std::vector<int> deg(g.num_nodes, 0);
    for (auto [u, v] : g.edges) {
        deg[u]++;
        deg[v]++;
    }
    g.features = Eigen::MatrixXd::Zero(g.num_nodes, kBuckets);
    for (int i = 0; i < g.num_nodes; ++i) {
        int b = std::min(static_cast<int>(std::floor(std::log2(deg[i] + 1.0))), kBuckets - 1);
        g.features(i, b) = 1.0;
    }
}

/// Fallback labels when no label file is given: a two-way partition from the
/// dominant non-trivial direction of the degree-normalized adjacency (power
/// iteration with the all-ones direction removed). Marks the graph so reports
/// can flag that labels were synthesized.
inline void synthesize_community_labels(Graph& g, std::uint64_t seed) {
    auto adj = adjacency_list(g.num_nodes, g.edges);
    std::vector<double> dg(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) dg[i] = static_cast<double>(adj[i].size()) + 1.0;

    Rng rng(derive_seed(seed, "synth-labels"));
    Eigen::VectorXd x(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) x[i] = rng.normal();
    Eigen::VectorXd sqrt_d(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) sqrt_d[i] = std::sqrt(dg[i]);
    double dnorm = sqrt_d.norm();

    for (int it = 0; it < 100; ++it) {
        x -= (sqrt_d.dot(x) / (dnorm * dnorm)) * sqrt_d;  // deflate the trivial eigvec
        Eigen::VectorXd y = x;                            // self loop term
        for (int u = 0; u < g.num_nodes; ++u)
            for (int v : adj[u]) y[u] += x[v] / std::sqrt(dg[u] * dg[v]);
        double n = y.norm();
        if (n < 1e-12) break;
        x = y / n;
    }
    g.labels.resize(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) g.labels[i] = x[i] >= 0 ? 1 : 0;
    int c0 = static_cast<int>(std::count(g.labels.begin(), g.labels.end(), 0));
    if (c0 == 0 || c0 == g.num_nodes) {
        // Degenerate direction; fall back to an index parity split so the
        // victim task still has two classes.
        for (int i = 0; i < g.num_nodes; ++i) g.labels[i] = i % 2;
    }
    g.labels_synthesized = true;
}

/// Load a dataset: edge list plus optional feature/label CSVs, applying the
/// documented fallbacks when the optional files are absent.
inline Graph load_dataset(const std::string& edge_path, const std::string& feature_path,
                          const std::string& label_path, std::uint64_t seed) {
    Graph g = load_edge_list(edge_path);
    if (!feature_path.empty())
        load_features_csv(g, feature_path);
    else
        assign_degree_bucket_features(g);
    if (!label_path.empty())
        load_labels_csv(g, label_path);
    else
        synthesize_community_labels(g, seed);
    return g;
}

/// Disjoint partition of a graph's edges into a leaked part the adversary may
/// traverse and a withheld part used only as evaluation targets.
struct LeakSplit {
    EdgeList leaked;
    EdgeList safe;
    double leak_rate = 0.0;
};

inline LeakSplit split_leak(const Graph& g, double leak_rate, std::uint64_t seed) {
    if (!(leak_rate >= 0.0 && leak_rate <= 1.0))
        throw std::invalid_argument("leak_rate must be in [0, 1], got " +
                                    std::to_string(leak_rate));
    LeakSplit s;
    s.leak_rate = leak_rate;
    const auto m = static_cast<long long>(g.edges.size());
    auto n_leak = static_cast<long long>(std::llround(leak_rate * static_cast<double>(m)));
    std::vector<int> idx(m);
    for (long long i = 0; i < m; ++i) idx[i] = static_cast<int>(i);
    Rng rng(derive_seed(seed, "leak-split"));
    rng.shuffle(idx);
    for (long long i = 0; i < m; ++i)
        (i < n_leak ? s.leaked : s.safe).push_back(g.edges[idx[i]]);
    std::sort(s.leaked.begin(), s.leaked.end());
    std::sort(s.safe.begin(), s.safe.end());
    return s;
}

/// Contextual stochastic block model parameters. Nodes split into two halves;
/// same-half pairs link with probability p, cross-half with q. Features are
/// iid N(mu, 1) per dimension on the first half and N(k * mu, 1) on the
/// second; the half index doubles as the node class label.
struct CsbmParams {
    int n = 100;
    double p = 0.1;
    double q = 0.05;
    double mu = 1.0;
    double k = 1.0;
    int d = 8;
};

inline void validate(const CsbmParams& c) {
    if (c.n < 2) throw std::invalid_argument("csbm: n must be >= 2");
    if (!(c.q >= 0.0 && c.q <= c.p && c.p <= 1.0))
        throw std::invalid_argument("csbm: require 0 <= q <= p <= 1");
    if (c.d < 1) throw std::invalid_argument("csbm: d must be >= 1");
}

inline Graph generate_csbm(const CsbmParams& c, std::uint64_t seed) {
    validate(c);
    Graph g;
    g.num_nodes = c.n;
    g.node_ids.resize(c.n);
    for (int i = 0; i < c.n; ++i) g.node_ids[i] = i;
    const int half = (c.n + 1) / 2;
    g.labels.resize(c.n);
    for (int i = 0; i < c.n; ++i) g.labels[i] = i < half ? 0 : 1;

    Rng rng(derive_seed(seed, "csbm"));
    EdgeList edges;
    for (int i = 0; i < c.n; ++i) {
        for (int j = i + 1; j < c.n; ++j) {
            const bool same = (i < half) == (j < half);
            const double prob = same ? c.p : c.q;
            if (prob > 0.0 && rng.uniform() < prob) edges.emplace_back(i, j);
        }
    }
    g.edges = canonical_edges(std::move(edges));

    g.features.resize(c.n, c.d);
    for (int i = 0; i < c.n; ++i) {
        const double mean = i < half ? c.mu : c.k * c.mu;
        for (int j = 0; j < c.d; ++j) g.features(i, j) = mean + rng.normal();
    }
    return g;
}

} // namespace linkthief

#endif
