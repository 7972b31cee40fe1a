#ifndef LINKTHIEF_BRIDGE_GRAPH_HPP
#define LINKTHIEF_BRIDGE_GRAPH_HPP

#include <Eigen/Dense>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkthief/graph.hpp"

namespace linkthief {

/// Merged graph joining the adversary's own (shadow) graph to the leaked part
/// of the attacked (target) graph through sampled cross links. Shadow nodes
/// occupy local ids [0, num_shadow), target nodes [num_shadow, total()).
/// `features` carries per-node posterior vectors from the respective models.
struct BridgeGraph {
    int num_shadow = 0;
    int num_target = 0;
    EdgeList shadow_edges;  // both endpoints < num_shadow
    EdgeList target_edges;  // both endpoints >= num_shadow (leaked links)
    EdgeList bridge_edges;  // shadow endpoint first, target endpoint second
    Eigen::MatrixXd features;

    int total() const { return num_shadow + num_target; }
    bool is_target(int v) const { return v >= num_shadow; }

    EdgeList all_edges() const {
        EdgeList e;
        e.reserve(shadow_edges.size() + target_edges.size() + bridge_edges.size());
        e.insert(e.end(), shadow_edges.begin(), shadow_edges.end());
        e.insert(e.end(), target_edges.begin(), target_edges.end());
        e.insert(e.end(), bridge_edges.begin(), bridge_edges.end());
        return e;
    }
};

/// Assemble the merged graph. `shadow_edges`/`leaked_edges` use 0-based local
/// ids of their own side; `bridges` pairs are (shadow id, target id), also
/// 0-based per side.
inline BridgeGraph make_bridge_graph(int num_shadow, const EdgeList& shadow_edges,
                                     int num_target, const EdgeList& leaked_edges,
                                     const Eigen::MatrixXd& shadow_feats,
                                     const Eigen::MatrixXd& target_feats,
                                     const EdgeList& bridges) {
    if (shadow_feats.rows() != num_shadow || target_feats.rows() != num_target)
        throw std::invalid_argument("bridge graph: feature row counts do not match node counts");
    if (num_shadow > 0 && num_target > 0 && shadow_feats.cols() != target_feats.cols())
        throw std::invalid_argument("bridge graph: posterior widths differ between sides");

    BridgeGraph bg;
    bg.num_shadow = num_shadow;
    bg.num_target = num_target;
    const int off = num_shadow;
    for (auto [u, v] : shadow_edges) {
        if (u < 0 || v < 0 || u >= num_shadow || v >= num_shadow)
            throw std::out_of_range("bridge graph: shadow edge endpoint out of range");
        bg.shadow_edges.emplace_back(u, v);
    }
    for (auto [u, v] : leaked_edges) {
        if (u < 0 || v < 0 || u >= num_target || v >= num_target)
            throw std::out_of_range("bridge graph: target edge endpoint out of range");
        bg.target_edges.emplace_back(u + off, v + off);
    }
    for (auto [m, t] : bridges) {
        if (m < 0 || m >= num_shadow || t < 0 || t >= num_target)
            throw std::out_of_range("bridge graph: bridge endpoint out of range");
        bg.bridge_edges.emplace_back(m, t + off);
    }

    const auto cols = std::max(shadow_feats.cols(), target_feats.cols());
    bg.features.resize(bg.total(), cols);
    if (num_shadow > 0) bg.features.topRows(num_shadow) = shadow_feats;
    if (num_target > 0) bg.features.bottomRows(num_target) = target_feats;
    return bg;
}

/// View of the attacked graph alone (no shadow side, no bridges), used at
/// evaluation time when only leaked links may be traversed.
inline BridgeGraph target_only_bridge_graph(int num_target, const EdgeList& edges,
                                            const Eigen::MatrixXd& target_feats) {
    return make_bridge_graph(0, {}, num_target, edges, Eigen::MatrixXd(0, target_feats.cols()),
                             target_feats, {});
}

/// Canonical edge dump plus a line-aligned side band naming each edge's
/// provenance: shadow | leaked-target | bridge.
inline void export_bridge_graph(const BridgeGraph& bg, const std::string& edges_path,
                                const std::string& provenance_path) {
    struct Row {
        Edge e;
        const char* kind;
    };
    std::vector<Row> rows;
    auto add = [&](const EdgeList& es, const char* kind) {
        for (auto e : es) {
            if (e.first > e.second) std::swap(e.first, e.second);
            rows.push_back({e, kind});
        }
    };
    add(bg.shadow_edges, "shadow");
    add(bg.target_edges, "leaked-target");
    add(bg.bridge_edges, "bridge");
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.e < b.e; });

    std::ofstream eo(edges_path);
    std::ofstream po(provenance_path);
    if (!eo || !po) throw std::runtime_error("cannot write bridge graph export");
    for (const auto& r : rows) {
        eo << r.e.first << " " << r.e.second << "\n";
        po << r.e.first << " " << r.e.second << " " << r.kind << "\n";
    }
}

} // namespace linkthief

#endif
