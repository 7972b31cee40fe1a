#ifndef LINKTHIEF_BRIDGE_HPP
#define LINKTHIEF_BRIDGE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkthief/bridge_graph.hpp"
#include "linkthief/checkpoint.hpp"
#include "linkthief/nn.hpp"
#include "linkthief/rng.hpp"
#include "linkthief/sinkhorn.hpp"

namespace linkthief {

/// Learns where to attach cross links between the adversary's graph and the
/// leaked target graph. Each shadow node owns a row of scores over target
/// nodes; bridges are sampled from the row-softmax policy and the scores are
/// updated by policy gradient with the negative inner transport loss as
/// reward, while a two-layer graph-conv encoder is updated by descent on the
/// two transport losses.
struct BridgeConfig {
    int samples_per_node = 10;
    int epochs = 30;
    double lr_scores = 0.01;
    double lr_encoder = 0.01;
    int encoder_hidden = 16;
    double sinkhorn_epsilon = 0.05;
    int sinkhorn_iters = 200;
    bool reward_baseline = true;
};

struct BridgeState {
    Eigen::MatrixXd scores;  // num_shadow x num_target
    Eigen::MatrixXd enc_w1;  // feat -> hidden
    Eigen::MatrixXd enc_w2;  // hidden -> feat (embedding width pinned to the posterior width)
    BridgeConfig cfg;

    int num_shadow() const { return static_cast<int>(scores.rows()); }
    int num_target() const { return static_cast<int>(scores.cols()); }
};

inline BridgeState init_bridge(int num_shadow, int num_target, int feat_dim,
                               const BridgeConfig& cfg, std::uint64_t seed) {
    if (num_shadow < 1 || num_target < 1)
        throw std::invalid_argument("bridge: both sides must be non-empty");
    if (cfg.samples_per_node < 1)
        throw std::invalid_argument("bridge: samples_per_node must be >= 1");
    if (cfg.samples_per_node > num_target)
        throw std::invalid_argument("bridge: cannot draw " +
                                    std::to_string(cfg.samples_per_node) +
                                    " distinct bridges per node from " +
                                    std::to_string(num_target) + " target nodes");
    BridgeState st;
    st.cfg = cfg;
    st.scores = Eigen::MatrixXd::Zero(num_shadow, num_target);  // uniform policy
    Rng rng(derive_seed(seed, "bridge-init"));
    st.enc_w1 = glorot(feat_dim, cfg.encoder_hidden, rng);
    st.enc_w2 = glorot(cfg.encoder_hidden, feat_dim, rng);
    return st;
}

/// Stable row softmax; invariant to per-row shifts of the scores.
inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& scores) {
    return softmax_rows(scores);
}

/// For every shadow node, draw `samples_per_node` distinct target endpoints
/// without replacement from its softmax row (sequential renormalized draws).
/// Returns (shadow id, target id) pairs in per-side 0-based indexing.
inline EdgeList sample_bridges(const BridgeState& st, std::uint64_t seed) {
    const int m = st.num_shadow(), n = st.num_target(), s = st.cfg.samples_per_node;
    Eigen::MatrixXd w = row_softmax(st.scores);
    Rng rng(derive_seed(seed, "bridge-sample"));
    EdgeList bridges;
    bridges.reserve(static_cast<std::size_t>(m) * s);
    std::vector<double> p(n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) p[j] = w(i, j);
        double mass = 1.0;
        for (int t = 0; t < s; ++t) {
            double u = rng.uniform() * mass;
            int pick = -1;
            for (int j = 0; j < n; ++j) {
                if (p[j] <= 0.0) continue;
                u -= p[j];
                pick = j;
                if (u <= 0.0) break;
            }
            bridges.emplace_back(i, pick);
            mass -= p[pick];
            p[pick] = 0.0;
            if (mass <= 0.0) mass = 0.0;
        }
    }
    return bridges;
}

/// Log-probability of a sampled bridge set under the factorized policy
/// (sum of log softmax entries over the sampled edges).
inline double bridge_log_prob(const Eigen::MatrixXd& scores, const EdgeList& bridges) {
    Eigen::MatrixXd w = row_softmax(scores);
    double lp = 0.0;
    for (auto [i, j] : bridges) lp += std::log(std::max(w(i, j), 1e-300));
    return lp;
}

/// Analytic gradient of bridge_log_prob w.r.t. the scores:
/// count of times column j was sampled in row i, minus S * softmax(i, j).
inline Eigen::MatrixXd bridge_log_prob_grad(const Eigen::MatrixXd& scores, const EdgeList& bridges,
                                            int samples_per_node) {
    Eigen::MatrixXd g = -static_cast<double>(samples_per_node) * row_softmax(scores);
    for (auto [i, j] : bridges) g(i, j) += 1.0;
    return g;
}

struct BridgeLosses {
    double inner = 0.0;  // transport distance between the two sides' embeddings
    double outer = 0.0;  // transport distance between target posteriors and all embeddings
    bool inner_converged = true;
    bool outer_converged = true;
};

namespace bridge_detail {

struct EncForward {
    NormAdj adj;
    Eigen::MatrixXd ax, pre1, h1, ah1, z;
};

inline EncForward encoder_forward(const BridgeState& st, const BridgeGraph& bg) {
    EncForward f;
    f.adj = NormAdj(bg.total(), bg.all_edges());
    f.ax = f.adj.apply(bg.features);
    f.pre1 = f.ax * st.enc_w1;
    f.h1 = tanh_mat(f.pre1);
    f.ah1 = f.adj.apply(f.h1);
    f.z = f.ah1 * st.enc_w2;
    return f;
}

} // namespace bridge_detail

/// Node embeddings of the merged graph under the current encoder.
inline Eigen::MatrixXd bridge_embeddings(const BridgeState& st, const BridgeGraph& bg) {
    return bridge_detail::encoder_forward(st, bg).z;
}

inline BridgeLosses bridge_losses(const BridgeState& st, const BridgeGraph& bg) {
    auto f = bridge_detail::encoder_forward(st, bg);
    const int m = bg.num_shadow, n = bg.num_target;
    if (m < 1 || n < 1) throw std::invalid_argument("bridge_losses: both sides must be non-empty");
    Eigen::MatrixXd zs = f.z.topRows(m);
    Eigen::MatrixXd zt = f.z.bottomRows(n);
    Eigen::MatrixXd xt = bg.features.bottomRows(n);
    auto inner = sinkhorn_distance(zs, zt, st.cfg.sinkhorn_epsilon, st.cfg.sinkhorn_iters);
    auto outer = sinkhorn_distance(xt, f.z, st.cfg.sinkhorn_epsilon, st.cfg.sinkhorn_iters);
    return {inner.value, outer.value, inner.converged, outer.converged};
}

struct BridgeTrainResult {
    BridgeState state{};
    EdgeList bridges;    // final sample under the trained policy
    BridgeGraph graph;   // merged graph built from the final sample
    std::vector<double> inner_trace, outer_trace, reward_trace;
};

/// Full training loop. Bridges are resampled every epoch; the score update
/// uses the policy-gradient estimator with an optional running-mean reward
/// baseline, and the encoder takes a plain gradient-descent step on the sum
/// of both transport losses with the converged plans held fixed.
inline BridgeTrainResult train_bridge(const BridgeConfig& cfg, int num_shadow,
                                      const EdgeList& shadow_edges,
                                      const Eigen::MatrixXd& shadow_feats, int num_target,
                                      const EdgeList& leaked_edges,
                                      const Eigen::MatrixXd& target_feats, std::uint64_t seed) {
    BridgeTrainResult out;
    out.state = init_bridge(num_shadow, num_target, static_cast<int>(shadow_feats.cols()), cfg, seed);
    BridgeState& st = out.state;

    double reward_sum = 0.0;
    int reward_count = 0;
    for (int e = 0; e < cfg.epochs; ++e) {
        EdgeList bridges = sample_bridges(st, derive_seed(seed, "epoch-" + std::to_string(e)));
        BridgeGraph bg = make_bridge_graph(num_shadow, shadow_edges, num_target, leaked_edges,
                                           shadow_feats, target_feats, bridges);
        auto f = bridge_detail::encoder_forward(st, bg);
        Eigen::MatrixXd zs = f.z.topRows(num_shadow);
        Eigen::MatrixXd zt = f.z.bottomRows(num_target);
        Eigen::MatrixXd xt = bg.features.bottomRows(num_target);

        auto inner = sinkhorn_plan(zs, zt, cfg.sinkhorn_epsilon, cfg.sinkhorn_iters);
        auto outer = sinkhorn_plan(xt, f.z, cfg.sinkhorn_epsilon, cfg.sinkhorn_iters);
        out.inner_trace.push_back(inner.info.value);
        out.outer_trace.push_back(outer.info.value);

        const double reward = -inner.info.value;
        out.reward_trace.push_back(reward);
        double advantage = reward;
        if (cfg.reward_baseline) {
            advantage = reward_count ? reward - reward_sum / reward_count : 0.0;
            reward_sum += reward;
            ++reward_count;
        }
        st.scores += cfg.lr_scores * advantage *
                     bridge_log_prob_grad(st.scores, bridges, cfg.samples_per_node);

        // Envelope gradients of the transport losses w.r.t. the embeddings.
        Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(f.z.rows(), f.z.cols());
        dz.topRows(num_shadow) += transport_grad_left(zs, zt, inner.plan);
        dz.bottomRows(num_target) += transport_grad_right(zs, zt, inner.plan);
        dz += transport_grad_right(xt, f.z, outer.plan);

        Eigen::MatrixXd dah1 = dz * st.enc_w2.transpose();
        Eigen::MatrixXd dw2 = f.ah1.transpose() * dz;
        Eigen::MatrixXd dh1 = f.adj.apply(dah1);
        Eigen::MatrixXd dpre1 = dh1.cwiseProduct((1.0 - f.h1.array().square()).matrix());
        Eigen::MatrixXd dw1 = f.ax.transpose() * dpre1;
        st.enc_w1 -= cfg.lr_encoder * dw1;
        st.enc_w2 -= cfg.lr_encoder * dw2;

        if (!st.scores.allFinite() || !st.enc_w1.allFinite() || !st.enc_w2.allFinite() ||
            !std::isfinite(inner.info.value) || !std::isfinite(outer.info.value))
            throw std::runtime_error(
                "train_bridge: diverged at epoch " + std::to_string(e) + " (inner=" +
                std::to_string(inner.info.value) + ", outer=" + std::to_string(outer.info.value) +
                "); lower the learning rates or raise sinkhorn_epsilon");
    }

    out.bridges = sample_bridges(st, derive_seed(seed, "final-sample"));
    out.graph = make_bridge_graph(num_shadow, shadow_edges, num_target, leaked_edges, shadow_feats,
                                  target_feats, out.bridges);
    return out;
}

inline void save_bridge(const BridgeState& st, const std::string& path) {
    Checkpoint ck;
    ck.put("scores", st.scores);
    ck.put("enc_w1", st.enc_w1);
    ck.put("enc_w2", st.enc_w2);
    ck.save(path);
}

inline BridgeState load_bridge(const std::string& path, const BridgeConfig& cfg) {
    Checkpoint ck = Checkpoint::load(path);
    BridgeState st;
    st.cfg = cfg;
    st.scores = ck.get("scores");
    st.enc_w1 = ck.get("enc_w1");
    st.enc_w2 = ck.get("enc_w2");
    return st;
}

} // namespace linkthief

#endif
