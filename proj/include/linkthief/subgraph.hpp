#ifndef LINKTHIEF_SUBGRAPH_HPP
#define LINKTHIEF_SUBGRAPH_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkthief/bridge_graph.hpp"
#include "linkthief/graph.hpp"
#include "linkthief/rng.hpp"

namespace linkthief {

/// Which edges a subgraph walk may follow. Links inside the attacked graph
/// are sampled from that side only; links inside the adversary's own graph
/// may additionally walk leaked links and bridges.
enum class LinkMode { target_link, shadow_link };

inline const char* to_string(LinkMode m) {
    return m == LinkMode::target_link ? "target-link" : "shadow-link";
}

/// Local enclosing subgraph around a candidate pair. nodes[0] and nodes[1]
/// are the pair endpoints; `edges` holds local indices with the candidate
/// edge itself removed; `drnl` holds the distance-role label of each node.
struct EdgeSubgraph {
    std::vector<int> nodes;  // global ids within the source graph
    EdgeList edges;          // local ids, focal edge excluded
    std::vector<int> drnl;
    Edge focal{0, 0};        // global ids
    LinkMode mode = LinkMode::target_link;
    int radius = 1;

    int size() const { return static_cast<int>(nodes.size()); }
};

/// Mode-restricted adjacency of a bridge graph, built once and shared across
/// many extractions.
struct TraversalIndex {
    std::vector<std::vector<int>> target_only;
    std::vector<std::vector<int>> all;
};

inline TraversalIndex build_traversal(const BridgeGraph& bg) {
    TraversalIndex t;
    t.target_only = adjacency_list(bg.total(), bg.target_edges);
    t.all = adjacency_list(bg.total(), bg.all_edges());
    return t;
}

/// Distance-role label for a node at hop distances (di, dj) from the two
/// endpoints of the candidate pair, computed with the pair's own edge absent:
///   1 + min(di, dj) + (d/2) * ((d/2) + (d % 2) - 1),  d = di + dj.
/// Endpoints take label 1 and nodes that cannot reach both endpoints take 0.
inline int drnl_label(long long di, long long dj) {
    const long long d = di + dj;
    const long long h = d / 2;
    return static_cast<int>(1 + std::min(di, dj) + h * (h + d % 2 - 1));
}

namespace subg_detail {

inline std::vector<long long> bfs_local(int start, int n, const std::vector<std::vector<int>>& adj) {
    std::vector<long long> dist(n, -1);
    std::queue<int> q;
    dist[start] = 0;
    q.push(start);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
    }
    return dist;
}

} // namespace subg_detail

inline EdgeSubgraph extract_edge_subgraph(const BridgeGraph& bg, const TraversalIndex& tidx,
                                          Edge pair, int r, LinkMode mode, int max_nodes,
                                          std::uint64_t seed) {
    const int n = bg.total();
    if (pair.first < 0 || pair.first >= n || pair.second < 0 || pair.second >= n)
        throw std::out_of_range("extract_edge_subgraph: pair endpoint not in graph");
    if (pair.first == pair.second)
        throw std::invalid_argument("extract_edge_subgraph: endpoints must differ");
    if (r < 1) throw std::invalid_argument("extract_edge_subgraph: radius must be >= 1");
    if (max_nodes < 2) throw std::invalid_argument("extract_edge_subgraph: max_nodes must be >= 2");
    if (mode == LinkMode::target_link && (!bg.is_target(pair.first) || !bg.is_target(pair.second)))
        throw std::invalid_argument("extract_edge_subgraph: target-link pair must lie on the target side");

    const auto& adj = mode == LinkMode::target_link ? tidx.target_only : tidx.all;

    // Multi-source BFS from both endpoints; hop = min distance to either one.
    std::vector<int> hop(n, -1);
    std::queue<int> q;
    hop[pair.first] = 0;
    q.push(pair.first);
    if (hop[pair.second] < 0) {
        hop[pair.second] = 0;
        q.push(pair.second);
    }
    std::vector<std::vector<int>> layers(r + 1);
    layers[0] = {pair.first, pair.second};
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (hop[u] == r) continue;
        for (int v : adj[u])
            if (hop[v] < 0) {
                hop[v] = hop[u] + 1;
                layers[hop[v]].push_back(v);
                q.push(v);
            }
    }
    for (auto& layer : layers) std::sort(layer.begin(), layer.end());

    // Cap at max_nodes: keep whole inner layers, downsample the first layer
    // that overflows, drop everything beyond it.
    EdgeSubgraph sub;
    sub.focal = pair;
    sub.mode = mode;
    sub.radius = r;
    sub.nodes = {pair.first, pair.second};
    int budget = max_nodes - 2;
    Rng rng(derive_seed(seed, "subgraph-cap"));
    for (int h = 1; h <= r && budget > 0; ++h) {
        auto layer = layers[h];
        if (static_cast<int>(layer.size()) > budget) {
            rng.shuffle(layer);
            layer.resize(budget);
            std::sort(layer.begin(), layer.end());
        }
        sub.nodes.insert(sub.nodes.end(), layer.begin(), layer.end());
        budget -= static_cast<int>(layer.size());
    }

    std::vector<int> local(n, -1);
    for (int i = 0; i < sub.size(); ++i) local[sub.nodes[i]] = i;
    for (int i = 0; i < sub.size(); ++i) {
        const int u = sub.nodes[i];
        for (int v : adj[u]) {
            const int lv = local[v];
            if (lv < 0 || lv <= i) continue;  // induced, each edge once
            if ((u == pair.first && v == pair.second) || (u == pair.second && v == pair.first))
                continue;  // candidate edge removed
            sub.edges.emplace_back(i, lv);
        }
    }
    std::sort(sub.edges.begin(), sub.edges.end());

    // Distance-role labels in the candidate-edge-removed local graph.
    auto ladj = adjacency_list(sub.size(), sub.edges);
    auto di = subg_detail::bfs_local(0, sub.size(), ladj);
    auto dj = subg_detail::bfs_local(1, sub.size(), ladj);
    sub.drnl.resize(sub.size());
    for (int i = 0; i < sub.size(); ++i) {
        if (i < 2)
            sub.drnl[i] = 1;
        else if (di[i] < 0 || dj[i] < 0)
            sub.drnl[i] = 0;
        else
            sub.drnl[i] = drnl_label(di[i], dj[i]);
    }
    return sub;
}

inline EdgeSubgraph extract_edge_subgraph(const BridgeGraph& bg, Edge pair, int r, LinkMode mode,
                                          int max_nodes, std::uint64_t seed) {
    return extract_edge_subgraph(bg, build_traversal(bg), pair, r, mode, max_nodes, seed);
}

/// Node features for the encoder: the node's posterior row concatenated with
/// a one-hot of its distance-role label, clamped into `onehot_width` buckets
/// (label 0 keeps bucket 0; labels >= width-1 share the last bucket).
inline Eigen::MatrixXd augment_subgraph_features(const EdgeSubgraph& sub,
                                                 const Eigen::MatrixXd& node_features,
                                                 int onehot_width, bool zero_labels = false) {
    if (onehot_width < 1) throw std::invalid_argument("augment: one-hot width must be >= 1");
    const auto f = node_features.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(sub.size(), f + onehot_width);
    for (int i = 0; i < sub.size(); ++i) {
        out.row(i).head(f) = node_features.row(sub.nodes[i]);
        if (!zero_labels) {
            const int b = std::min(sub.drnl[i], onehot_width - 1);
            out(i, f + b) = 1.0;
        }
    }
    return out;
}

/// Mean over non-isolated subgraph nodes of the fraction of their neighbors
/// lying on the target side. 1 when the subgraph lives entirely on the target
/// side; throws when every node is isolated.
inline double target_node_density(const EdgeSubgraph& sub, const BridgeGraph& bg) {
    auto ladj = adjacency_list(sub.size(), sub.edges);
    double acc = 0.0;
    int counted = 0;
    for (int i = 0; i < sub.size(); ++i) {
        if (ladj[i].empty()) continue;
        int tgt = 0;
        for (int j : ladj[i]) tgt += bg.is_target(sub.nodes[j]) ? 1 : 0;
        acc += static_cast<double>(tgt) / static_cast<double>(ladj[i].size());
        ++counted;
    }
    if (counted == 0)
        throw std::domain_error("target_node_density: undefined, all subgraph nodes isolated");
    return acc / counted;
}

/// Cache serialization. Subgraphs are keyed by (pair, mode, radius); the file
/// header records the extraction seed.
inline void save_subgraphs(const std::vector<EdgeSubgraph>& subs, std::uint64_t seed,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write subgraph cache: " + path);
    out << "linkthief-subgraphs v1\n";
    out << "seed " << seed << "\n";
    out << subs.size() << "\n";
    for (const auto& s : subs) {
        out << s.focal.first << " " << s.focal.second << " " << to_string(s.mode) << " "
            << s.radius << " " << s.nodes.size() << " " << s.edges.size() << "\n";
        for (std::size_t i = 0; i < s.nodes.size(); ++i)
            out << s.nodes[i] << (i + 1 == s.nodes.size() ? "\n" : " ");
        if (s.nodes.empty()) out << "\n";
        for (auto [u, v] : s.edges) out << u << " " << v << "\n";
        for (std::size_t i = 0; i < s.drnl.size(); ++i)
            out << s.drnl[i] << (i + 1 == s.drnl.size() ? "\n" : " ");
        if (s.drnl.empty()) out << "\n";
    }
}

inline std::vector<EdgeSubgraph> load_subgraphs(const std::string& path, std::uint64_t* seed = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open subgraph cache: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "linkthief-subgraphs v1")
        throw std::runtime_error(path + ": not a subgraph cache");
    std::string word;
    std::uint64_t s = 0;
    in >> word >> s;
    if (word != "seed") throw std::runtime_error(path + ": malformed cache header");
    if (seed) *seed = s;
    std::size_t count = 0;
    in >> count;
    std::vector<EdgeSubgraph> subs(count);
    for (auto& sub : subs) {
        std::string mode;
        std::size_t nn = 0, ne = 0;
        if (!(in >> sub.focal.first >> sub.focal.second >> mode >> sub.radius >> nn >> ne))
            throw std::runtime_error(path + ": truncated cache");
        sub.mode = mode == "target-link" ? LinkMode::target_link : LinkMode::shadow_link;
        sub.nodes.resize(nn);
        for (auto& v : sub.nodes) in >> v;
        sub.edges.resize(ne);
        for (auto& e : sub.edges) in >> e.first >> e.second;
        sub.drnl.resize(nn);
        for (auto& v : sub.drnl) in >> v;
        if (!in) throw std::runtime_error(path + ": truncated cache");
    }
    return subs;
}

} // namespace linkthief

#endif
