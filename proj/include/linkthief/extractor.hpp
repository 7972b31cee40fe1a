#ifndef LINKTHIEF_EXTRACTOR_HPP
#define LINKTHIEF_EXTRACTOR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "linkthief/nn.hpp"
#include "linkthief/rng.hpp"
#include "linkthief/subgraph.hpp"

namespace linkthief {

/// Subgraph-level feature learner. A stack of tanh graph convolutions embeds
/// every node; nodes are ranked by the final channel and the top rows are
/// concatenated (zero padded) into a fixed-length vector. Training maximizes
/// a bilinear mutual-information bound between node embeddings of one view
/// and the pooled summary of the other view (raw adjacency vs feature-kNN
/// adjacency), so no link labels are consumed.
struct ExtractorConfig {
    std::vector<int> channels{32, 32, 1};
    int pool_size = 10;
    int knn_k = 3;
    bool cross_subgraph_negatives = false;
};

struct ExtractorState {
    ExtractorConfig cfg;
    std::vector<Eigen::MatrixXd> w;  // conv weights, layer l maps prev width -> channels[l]
    Eigen::MatrixXd psi;             // width x (width * pool_size)
    int in_dim = 0;

    int width() const { return std::accumulate(cfg.channels.begin(), cfg.channels.end(), 0); }
    int feature_length() const { return width() * cfg.pool_size; }
};

inline ExtractorState init_extractor(const ExtractorConfig& cfg, int in_dim, std::uint64_t seed) {
    if (cfg.pool_size < 1) throw std::invalid_argument("extractor: pool_size must be >= 1");
    if (cfg.knn_k < 1) throw std::invalid_argument("extractor: knn_k must be >= 1");
    if (cfg.channels.empty()) throw std::invalid_argument("extractor: need at least one channel");
    for (int c : cfg.channels)
        if (c < 1) throw std::invalid_argument("extractor: channel widths must be >= 1");
    ExtractorState st;
    st.cfg = cfg;
    st.in_dim = in_dim;
    Rng rng(derive_seed(seed, "extractor-init"));
    int prev = in_dim;
    for (int c : cfg.channels) {
        st.w.push_back(glorot(prev, c, rng));
        prev = c;
    }
    st.psi = glorot(st.width(), st.feature_length(), rng);
    return st;
}

/// Symmetrized k-nearest-neighbor edges under cosine similarity of the given
/// feature rows. Ties resolve to the lower index; k is clipped to n-1.
inline EdgeList build_similarity_view(const Eigen::MatrixXd& feats, int k) {
    const int n = static_cast<int>(feats.rows());
    if (k < 1) throw std::invalid_argument("build_similarity_view: k must be >= 1");
    EdgeList edges;
    if (n <= 1) return edges;
    const int keff = std::min(k, n - 1);

    Eigen::VectorXd norms(n);
    for (int i = 0; i < n; ++i) norms[i] = feats.row(i).norm();
    std::vector<std::pair<double, int>> cand;
    for (int i = 0; i < n; ++i) {
        cand.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double sim = 0.0;
            if (norms[i] > 1e-300 && norms[j] > 1e-300)
                sim = feats.row(i).dot(feats.row(j)) / (norms[i] * norms[j]);
            cand.emplace_back(-sim, j);  // ascending sort puts highest similarity first
        }
        std::sort(cand.begin(), cand.end());
        for (int t = 0; t < keff; ++t) {
            int j = cand[t].second;
            edges.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    return canonical_edges(std::move(edges));
}

struct EncodeTrace {
    NormAdj adj;
    std::vector<Eigen::MatrixXd> ah;  // per layer: adjacency applied to the layer input
    std::vector<Eigen::MatrixXd> h;   // per layer: tanh output
    Eigen::MatrixXd z;                // concatenated channels
    std::vector<int> order;           // node ranking used by the pooling stage
    Eigen::VectorXd s;                // pooled vector
};

/// Forward pass. Nodes are ranked by the last channel, descending, ties
/// broken by ascending local node index (the documented secondary key that
/// makes the pooled output reproducible under input permutations with
/// distinct keys).
inline EncodeTrace encode_subgraph(const ExtractorState& st, const Eigen::MatrixXd& feats,
                                   const EdgeList& edges) {
    if (feats.cols() != st.in_dim)
        throw std::invalid_argument("encode_subgraph: feature width does not match extractor");
    const int n = static_cast<int>(feats.rows());
    if (n < 1) throw std::invalid_argument("encode_subgraph: empty subgraph");

    EncodeTrace t;
    t.adj = NormAdj(n, edges);
    Eigen::MatrixXd cur = feats;
    for (const auto& w : st.w) {
        t.ah.push_back(t.adj.apply(cur));
        t.h.push_back(tanh_mat(t.ah.back() * w));
        cur = t.h.back();
    }
    const int width = st.width();
    t.z.resize(n, width);
    int col = 0;
    for (const auto& h : t.h) {
        t.z.middleCols(col, h.cols()) = h;
        col += static_cast<int>(h.cols());
    }

    t.order.resize(n);
    std::iota(t.order.begin(), t.order.end(), 0);
    const Eigen::VectorXd key = t.z.col(width - 1);
    std::sort(t.order.begin(), t.order.end(), [&](int a, int b) {
        if (key[a] != key[b]) return key[a] > key[b];
        return a < b;
    });

    t.s = Eigen::VectorXd::Zero(st.feature_length());
    const int rows = std::min(st.cfg.pool_size, n);
    for (int r = 0; r < rows; ++r) t.s.segment(r * width, width) = t.z.row(t.order[r]);
    return t;
}

/// Backward pass through pooling and the convolution stack. `dz` and `ds` are
/// gradients w.r.t. the node embeddings and the pooled vector; outputs
/// accumulate into `dw` (same shapes as st.w).
inline void encode_backward(const ExtractorState& st, const EncodeTrace& t,
                            Eigen::MatrixXd dz, const Eigen::VectorXd& ds,
                            std::vector<Eigen::MatrixXd>& dw) {
    const int width = st.width();
    const int n = static_cast<int>(t.z.rows());
    if (ds.size() > 0) {
        const int rows = std::min(st.cfg.pool_size, n);
        for (int r = 0; r < rows; ++r) dz.row(t.order[r]) += ds.segment(r * width, width).transpose();
    }

    const int layers = static_cast<int>(st.w.size());
    Eigen::MatrixXd carry;  // gradient flowing into the current layer's output
    int col = width;
    for (int l = layers - 1; l >= 0; --l) {
        const int c = static_cast<int>(st.w[l].cols());
        col -= c;
        Eigen::MatrixXd dh = dz.middleCols(col, c);
        if (carry.size() > 0) dh += carry;
        Eigen::MatrixXd dpre =
            dh.cwiseProduct((1.0 - t.h[l].array().square()).matrix());
        dw[l] += t.ah[l].transpose() * dpre;
        if (l > 0) carry = t.adj.apply(dpre * st.w[l].transpose());
    }
}

/// Jensen-Shannon style mutual-information bound between node embeddings and
/// a pooled summary: mean log discriminator on matched pairs plus mean
/// log-complement on mismatched (shuffled) rows, discriminator
/// T(z, s) = sigmoid(z' Psi s) with probabilities clamped to
/// [1e-7, 1 - 1e-7].
inline double mi_estimate(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& z,
                          const Eigen::VectorXd& s, const Eigen::MatrixXd& z_neg) {
    if (z.rows() != z_neg.rows())
        throw std::invalid_argument("mi_estimate: positive and negative row counts differ");
    if (z.rows() == 0) throw std::invalid_argument("mi_estimate: empty embedding");
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    const Eigen::VectorXd v = psi * s;
    const double inv = 1.0 / (2.0 * static_cast<double>(z.rows()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double tp = std::clamp(sigmoid(z.row(i).dot(v)), lo, hi);
        const double tn = std::clamp(sigmoid(z_neg.row(i).dot(v)), lo, hi);
        acc += std::log(tp) + std::log(1.0 - tn);
    }
    return acc * inv;
}

struct MiGrads {
    double value = 0.0;
    Eigen::MatrixXd dpsi;
    Eigen::MatrixXd dz;
    Eigen::MatrixXd dz_neg;
    Eigen::VectorXd ds;
};

inline MiGrads mi_backward(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& z,
                           const Eigen::VectorXd& s, const Eigen::MatrixXd& z_neg) {
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    MiGrads g;
    g.dpsi = Eigen::MatrixXd::Zero(psi.rows(), psi.cols());
    g.dz = Eigen::MatrixXd::Zero(z.rows(), z.cols());
    g.dz_neg = Eigen::MatrixXd::Zero(z_neg.rows(), z_neg.cols());
    g.ds = Eigen::VectorXd::Zero(s.size());
    const Eigen::VectorXd v = psi * s;
    const double inv = 1.0 / (2.0 * static_cast<double>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double tp_raw = sigmoid(z.row(i).dot(v));
        const double tn_raw = sigmoid(z_neg.row(i).dot(v));
        const double tp = std::clamp(tp_raw, lo, hi);
        const double tn = std::clamp(tn_raw, lo, hi);
        g.value += (std::log(tp) + std::log(1.0 - tn)) * inv;
        // The clamp flattens the objective outside (lo, hi); gradients match.
        const double da_pos = (tp_raw > lo && tp_raw < hi) ? (1.0 - tp_raw) * inv : 0.0;
        const double da_neg = (tn_raw > lo && tn_raw < hi) ? -tn_raw * inv : 0.0;
        if (da_pos != 0.0) {
            g.dpsi += da_pos * z.row(i).transpose() * s.transpose();
            g.dz.row(i) += da_pos * v.transpose();
            g.ds += da_pos * psi.transpose() * z.row(i).transpose();
        }
        if (da_neg != 0.0) {
            g.dpsi += da_neg * z_neg.row(i).transpose() * s.transpose();
            g.dz_neg.row(i) += da_neg * v.transpose();
            g.ds += da_neg * psi.transpose() * z_neg.row(i).transpose();
        }
    }
    return g;
}

/// One training example: a subgraph's augmented features plus its two edge
/// views (observed adjacency and feature-kNN adjacency).
struct SubgraphSample {
    Eigen::MatrixXd features;
    EdgeList raw_edges;
    EdgeList sim_edges;
};

inline SubgraphSample make_extractor_sample(const EdgeSubgraph& sub, const Eigen::MatrixXd& feats,
                                            int knn_k) {
    return SubgraphSample{feats, sub.edges, build_similarity_view(feats, knn_k)};
}

/// Contrastive training. Both the discriminator and the encoder take
/// gradient ascent steps on the summed cross-view bound; each subgraph draws
/// one negative row permutation per epoch, used for both view orders so the
/// objective is symmetric under exchanging the views.
inline std::vector<double> train_extractor(ExtractorState& st,
                                           const std::vector<SubgraphSample>& batch, int epochs,
                                           double lr_psi, double lr_theta, std::uint64_t seed) {
    if (batch.empty()) throw std::invalid_argument("train_extractor: empty batch");
    Rng rng(derive_seed(seed, "extractor-train"));
    std::vector<double> trace;
    trace.reserve(epochs);

    const std::size_t nb = batch.size();
    for (int e = 0; e < epochs; ++e) {
        Eigen::MatrixXd dpsi = Eigen::MatrixXd::Zero(st.psi.rows(), st.psi.cols());
        std::vector<Eigen::MatrixXd> dw;
        for (const auto& w : st.w) dw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        double loss = 0.0;

        std::vector<EncodeTrace> raw(nb), sim(nb);
        std::vector<Eigen::MatrixXd> dz_raw(nb), dz_sim(nb);
        std::vector<Eigen::VectorXd> ds_raw(nb), ds_sim(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            raw[b] = encode_subgraph(st, batch[b].features, batch[b].raw_edges);
            sim[b] = encode_subgraph(st, batch[b].features, batch[b].sim_edges);
            dz_raw[b] = Eigen::MatrixXd::Zero(raw[b].z.rows(), raw[b].z.cols());
            dz_sim[b] = Eigen::MatrixXd::Zero(sim[b].z.rows(), sim[b].z.cols());
        }

        for (std::size_t b = 0; b < nb; ++b) {
            const int n = static_cast<int>(batch[b].features.rows());
            // One negative index draw per subgraph and epoch, shared by both
            // view orders so swapping the views leaves the objective intact.
            const std::size_t donor =
                st.cfg.cross_subgraph_negatives && nb > 1 ? (b + 1) % nb : b;
            std::vector<int> neg_idx(n);
            if (donor == b) {
                std::iota(neg_idx.begin(), neg_idx.end(), 0);
                rng.shuffle(neg_idx);
            } else {
                const int dn = static_cast<int>(raw[donor].z.rows());
                for (int i = 0; i < n; ++i) neg_idx[i] = rng.uniform_int(dn);
            }

            Eigen::MatrixXd raw_neg(n, st.width()), sim_neg(n, st.width());
            for (int i = 0; i < n; ++i) {
                raw_neg.row(i) = raw[donor].z.row(neg_idx[i]);
                sim_neg.row(i) = sim[donor].z.row(neg_idx[i]);
            }

            MiGrads t1 = mi_backward(st.psi, raw[b].z, sim[b].s, raw_neg);
            MiGrads t2 = mi_backward(st.psi, sim[b].z, raw[b].s, sim_neg);
            loss += t1.value + t2.value;
            dpsi += t1.dpsi + t2.dpsi;

            dz_raw[b] += t1.dz;
            dz_sim[b] += t2.dz;
            for (int i = 0; i < n; ++i) {
                dz_raw[donor].row(neg_idx[i]) += t1.dz_neg.row(i);
                dz_sim[donor].row(neg_idx[i]) += t2.dz_neg.row(i);
            }
            ds_sim[b] = t1.ds;
            ds_raw[b] = t2.ds;
        }

        for (std::size_t b = 0; b < nb; ++b) {
            encode_backward(st, raw[b], dz_raw[b], ds_raw[b], dw);
            encode_backward(st, sim[b], dz_sim[b], ds_sim[b], dw);
        }

        const double scale = 1.0 / static_cast<double>(batch.size());
        loss *= scale;
        if (!std::isfinite(loss))
            throw std::runtime_error("train_extractor: objective diverged at epoch " +
                                     std::to_string(e));
        st.psi += lr_psi * scale * dpsi;
        for (std::size_t l = 0; l < st.w.size(); ++l) {
            require_finite(dw[l], "extractor gradient");
            st.w[l] += lr_theta * scale * dw[l];
        }
        trace.push_back(loss);
    }
    return trace;
}

/// Inference-time feature: pooled embedding of the observed-adjacency view.
inline Eigen::VectorXd structure_features(const ExtractorState& st, const Eigen::MatrixXd& feats,
                                          const EdgeList& edges) {
    return encode_subgraph(st, feats, edges).s;
}

} // namespace linkthief

#endif
