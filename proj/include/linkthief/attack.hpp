#ifndef LINKTHIEF_ATTACK_HPP
#define LINKTHIEF_ATTACK_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkthief/graph.hpp"
#include "linkthief/nn.hpp"
#include "linkthief/rng.hpp"
#include "linkthief/similarity.hpp"

namespace linkthief {

/// Final stage of the attack: assemble balanced link/no-link pair datasets,
/// train a small MLP on per-pair feature vectors, and report AUC plus attack
/// success rate with confusion counts.

enum class PairOrigin { shadow, target_leaked, target_test };

inline const char* to_string(PairOrigin o) {
    switch (o) {
        case PairOrigin::shadow: return "shadow";
        case PairOrigin::target_leaked: return "target-leaked";
        case PairOrigin::target_test: return "target-test";
    }
    return "?";
}

struct AttackSample {
    int u = 0, v = 0;     // indices within the origin graph
    PairOrigin origin = PairOrigin::shadow;
    int label = 0;           // 1 = link exists
    Eigen::VectorXd similarity;
    Eigen::VectorXd structure;  // empty for similarity-only attackers
};

struct AttackDatasets {
    std::vector<AttackSample> train, val, test;
};

namespace attack_detail {

/// Uniform non-link pairs, disjoint from `forbidden`; draws are added to
/// `forbidden` so later calls stay disjoint. Falls back to enumerating the
/// complement when rejection sampling stalls.
inline EdgeList sample_negative_pairs(int num_nodes, std::set<Edge>& forbidden, std::size_t count,
                                      Rng& rng) {
    if (num_nodes < 2) throw std::runtime_error("negative sampling: need at least 2 nodes");
    EdgeList out;
    out.reserve(count);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 200 + 40 * count;
    while (out.size() < count && attempts < max_attempts) {
        ++attempts;
        int a = static_cast<int>(rng.uniform_int(num_nodes));
        int b = static_cast<int>(rng.uniform_int(num_nodes));
        if (a == b) continue;
        Edge e{std::min(a, b), std::max(a, b)};
        if (forbidden.count(e)) continue;
        forbidden.insert(e);
        out.push_back(e);
    }
    if (out.size() < count) {
        EdgeList pool;
        for (int a = 0; a < num_nodes; ++a)
            for (int b = a + 1; b < num_nodes; ++b)
                if (!forbidden.count({a, b})) pool.emplace_back(a, b);
        if (pool.size() < count - out.size())
            throw std::runtime_error("negative sampling: graph too dense; need " +
                                     std::to_string(count) + " disjoint non-links, only " +
                                     std::to_string(out.size() + pool.size()) + " available");
        rng.shuffle(pool);
        while (out.size() < count) {
            forbidden.insert(pool.back());
            out.push_back(pool.back());
            pool.pop_back();
        }
    }
    return out;
}

inline void split_7_3(std::vector<AttackSample>& pool, Rng& rng, std::vector<AttackSample>& train,
                      std::vector<AttackSample>& val) {
    rng.shuffle(pool);
    const std::size_t k = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(pool.size())));
    for (std::size_t i = 0; i < pool.size(); ++i)
        (i < k ? train : val).push_back(std::move(pool[i]));
}

} // namespace attack_detail

/// Build balanced train/val/test pair sets. Train/val positives are the
/// shadow graph's links (when a shadow graph is given) plus the leaked target
/// links, split 7:3; negatives are equal-count uniform non-links per side.
/// Test positives are exactly the withheld target links, with fresh target
/// non-links disjoint from every train/val negative. Pass shadow = nullptr
/// for the leaked-only knowledge regime.
inline AttackDatasets build_attack_datasets(const LeakSplit& split, int num_target_nodes,
                                            const Graph* shadow, std::uint64_t seed) {
    if (num_target_nodes < 2)
        throw std::invalid_argument("build_attack_datasets: target graph too small");
    if (split.leaked.empty() && (shadow == nullptr || shadow->edges.empty()))
        throw std::invalid_argument("build_attack_datasets: no positive links available");
    if (split.safe.empty())
        throw std::invalid_argument("build_attack_datasets: no withheld links to test on");

    Rng rng(derive_seed(seed, "attack-datasets"));
    std::vector<AttackSample> pos, neg;

    if (shadow != nullptr) {
        std::set<Edge> shadow_forbidden(shadow->edges.begin(), shadow->edges.end());
        for (auto [u, v] : shadow->edges)
            pos.push_back({u, v, PairOrigin::shadow, 1, {}, {}});
        for (auto [u, v] : attack_detail::sample_negative_pairs(shadow->num_nodes, shadow_forbidden,
                                                                shadow->edges.size(), rng))
            neg.push_back({u, v, PairOrigin::shadow, 0, {}, {}});
    }

    std::set<Edge> target_forbidden(split.leaked.begin(), split.leaked.end());
    target_forbidden.insert(split.safe.begin(), split.safe.end());
    for (auto [u, v] : split.leaked)
        pos.push_back({u, v, PairOrigin::target_leaked, 1, {}, {}});
    for (auto [u, v] : attack_detail::sample_negative_pairs(num_target_nodes, target_forbidden,
                                                            split.leaked.size(), rng))
        neg.push_back({u, v, PairOrigin::target_leaked, 0, {}, {}});

    AttackDatasets out;
    attack_detail::split_7_3(pos, rng, out.train, out.val);
    attack_detail::split_7_3(neg, rng, out.train, out.val);

    for (auto [u, v] : split.safe)
        out.test.push_back({u, v, PairOrigin::target_test, 1, {}, {}});
    for (auto [u, v] : attack_detail::sample_negative_pairs(num_target_nodes, target_forbidden,
                                                            split.safe.size(), rng))
        out.test.push_back({u, v, PairOrigin::target_test, 0, {}, {}});
    return out;
}

/// Per-pair structure feature provider; return an empty vector to skip.
using StructureFn = std::function<Eigen::VectorXd(const AttackSample&)>;

/// Fill similarity (and optionally structure) vectors in place. Shadow pairs
/// read rows of `shadow_posteriors`; target pairs read `target_posteriors`.
inline void featurize_attack_samples(std::vector<AttackSample>& samples,
                                     const Eigen::MatrixXd& shadow_posteriors,
                                     const Eigen::MatrixXd& target_posteriors,
                                     const std::vector<NamedMetric>& metrics,
                                     const StructureFn& structure_fn = nullptr) {
    for (auto& s : samples) {
        const Eigen::MatrixXd& post =
            s.origin == PairOrigin::shadow ? shadow_posteriors : target_posteriors;
        if (s.u < 0 || s.v < 0 || s.u >= post.rows() || s.v >= post.rows())
            throw std::out_of_range("featurize_attack_samples: node id outside posterior table");
        s.similarity = similarity_features(post.row(s.u), post.row(s.v), metrics);
        s.structure = structure_fn ? structure_fn(s) : Eigen::VectorXd();
    }
}

/// Rows are [similarity | structure]; lengths must be uniform.
inline Eigen::MatrixXd attack_design_matrix(const std::vector<AttackSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("attack_design_matrix: empty sample set");
    const Eigen::Index ds = samples.front().similarity.size();
    const Eigen::Index dt = samples.front().structure.size();
    if (ds == 0) throw std::invalid_argument("attack_design_matrix: samples not featurized");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), ds + dt);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].similarity.size() != ds || samples[i].structure.size() != dt)
            throw std::invalid_argument("attack_design_matrix: inconsistent feature lengths");
        x.row(static_cast<Eigen::Index>(i)).head(ds) = samples[i].similarity;
        if (dt > 0) x.row(static_cast<Eigen::Index>(i)).tail(dt) = samples[i].structure;
    }
    return x;
}

inline Eigen::VectorXd attack_label_vector(const std::vector<AttackSample>& samples) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = samples[i].label;
    return y;
}

/// Area under the ROC curve via the rank statistic; tied scores contribute
/// their average rank (each tied positive/negative pair counts 1/2).
inline double auc_score(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    const Eigen::Index n = scores.size();
    if (n == 0 || labels.size() != n) throw std::invalid_argument("auc_score: shape mismatch");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(),
              [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });
    double pos_rank_sum = 0.0;
    Eigen::Index npos = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores(idx[j]) == scores(idx[i])) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t t = i; t < j; ++t) {
            if (labels(idx[t]) > 0.5) {
                pos_rank_sum += avg_rank;
                ++npos;
            }
        }
        i = j;
    }
    const Eigen::Index nneg = n - npos;
    if (npos == 0 || nneg == 0)
        throw std::domain_error("auc_score: undefined for single-class labels");
    return (pos_rank_sum - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1)) /
           (static_cast<double>(npos) * static_cast<double>(nneg));
}

struct MlpConfig {
    std::vector<int> hidden{64, 32};
    int epochs = 100;
    double lr = 0.001;
};

struct MlpModel {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::RowVectorXd> b;
};

/// ReLU hidden layers, sigmoid output; returns one score per input row.
inline Eigen::VectorXd mlp_scores(const MlpModel& m, const Eigen::MatrixXd& x) {
    if (m.w.empty() || x.cols() != m.w.front().rows())
        throw std::invalid_argument("mlp_scores: input width does not match the model");
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        Eigen::MatrixXd pre = (a * m.w[l]).rowwise() + m.b[l];
        a = l + 1 < m.w.size() ? relu(pre) : sigmoid(pre);
    }
    return a.col(0);
}

struct AttackTrainResult {
    MlpModel model;       // weights from the best-validation epoch
    double best_val_auc = 0.0;
    int best_epoch = 0;   // 0 = untrained initialization
    std::vector<double> loss_trace;
};

/// Full-batch binary cross-entropy training with Adam; after every epoch the
/// validation AUC is measured and the best-scoring weights are kept.
inline AttackTrainResult train_attack_model(const std::vector<AttackSample>& train,
                                            const std::vector<AttackSample>& val,
                                            const MlpConfig& cfg, std::uint64_t seed) {
    if (train.empty() || val.empty())
        throw std::invalid_argument("train_attack_model: empty train or validation set");
    if (cfg.epochs < 1 || cfg.lr <= 0.0)
        throw std::invalid_argument("train_attack_model: epochs >= 1 and lr > 0 required");
    Eigen::MatrixXd xtr = attack_design_matrix(train);
    Eigen::VectorXd ytr = attack_label_vector(train);
    Eigen::MatrixXd xva = attack_design_matrix(val);
    Eigen::VectorXd yva = attack_label_vector(val);
    if (xva.cols() != xtr.cols())
        throw std::invalid_argument("train_attack_model: train/val feature widths differ");

    std::vector<Eigen::Index> widths{xtr.cols()};
    for (int h : cfg.hidden) {
        if (h < 1) throw std::invalid_argument("train_attack_model: hidden widths must be >= 1");
        widths.push_back(h);
    }
    widths.push_back(1);

    Rng rng(derive_seed(seed, "attack-mlp-init"));
    MlpModel m;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        m.w.push_back(glorot(static_cast<int>(widths[l]), static_cast<int>(widths[l + 1]), rng));
        m.b.push_back(Eigen::RowVectorXd::Zero(widths[l + 1]));
    }

    std::vector<Adam> opt_w, opt_b;
    for (std::size_t l = 0; l < m.w.size(); ++l) {
        opt_w.emplace_back(cfg.lr);
        opt_b.emplace_back(cfg.lr);
    }

    AttackTrainResult out;
    out.model = m;
    out.best_val_auc = auc_score(mlp_scores(m, xva), yva);
    out.best_epoch = 0;

    const double inv_n = 1.0 / static_cast<double>(xtr.rows());
    const std::size_t nl = m.w.size();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<Eigen::MatrixXd> acts{xtr}, pres;
        for (std::size_t l = 0; l < nl; ++l) {
            pres.push_back(((acts.back() * m.w[l]).rowwise() + m.b[l]).eval());
            acts.push_back(l + 1 < nl ? relu(pres.back()) : sigmoid(pres.back()));
        }
        Eigen::VectorXd s = acts.back().col(0);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double si = std::min(std::max(s(i), 1e-12), 1.0 - 1e-12);
            loss -= ytr(i) * std::log(si) + (1.0 - ytr(i)) * std::log(1.0 - si);
        }
        out.loss_trace.push_back(loss * inv_n);

        Eigen::MatrixXd delta = (s - ytr) * inv_n;  // sigmoid + BCE cancel
        for (std::size_t l = nl; l-- > 0;) {
            Eigen::MatrixXd gw = acts[l].transpose() * delta;
            Eigen::RowVectorXd gb = delta.colwise().sum();
            if (l > 0)
                delta = ((delta * m.w[l].transpose()).array() * relu_grad_mask(pres[l - 1]).array())
                            .matrix();
            opt_w[l].step(m.w[l], gw);
            Eigen::MatrixXd bmat = m.b[l], gbmat = gb;
            opt_b[l].step(bmat, gbmat);
            m.b[l] = bmat;
        }
        require_finite(m.w.front(), "train_attack_model: diverged");

        const double va = auc_score(mlp_scores(m, xva), yva);
        if (va > out.best_val_auc) {
            out.best_val_auc = va;
            out.best_epoch = epoch;
            out.model = m;
        }
    }
    return out;
}

struct AttackMetrics {
    double auc = 0.0;
    double asr = 0.0;  // accuracy at the 0.5 threshold on the balanced test set
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Confusion counts follow the hypothesis-test orientation where the claim
/// under test is "this pair is unlinked": tp counts truly-unlinked pairs
/// predicted unlinked and tn counts truly-linked pairs predicted linked.
/// Accuracy (asr) is unaffected by the orientation.
inline AttackMetrics evaluate_attack(const MlpModel& model,
                                     const std::vector<AttackSample>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate_attack: empty test set");
    Eigen::MatrixXd x = attack_design_matrix(test);
    Eigen::VectorXd y = attack_label_vector(test);
    Eigen::VectorXd s = mlp_scores(model, x);
    AttackMetrics m;
    m.auc = auc_score(s, y);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const bool linked = y(i) > 0.5;
        const bool predicted_link = s(i) >= 0.5;
        if (!linked && !predicted_link) ++m.tp;
        else if (!linked && predicted_link) ++m.fn;
        else if (linked && predicted_link) ++m.tn;
        else ++m.fp;
    }
    m.asr = static_cast<double>(m.tp + m.tn) / static_cast<double>(test.size());
    return m;
}

struct ScatterPoint {
    double x = 0.0, y = 0.0;
    std::string group;  // TP / FP / TN / FN, same orientation as evaluate_attack
};

/// Two-dimensional principal-component projection of the test features,
/// tagged by confusion class. Qualitative diagnostic only.
inline std::vector<ScatterPoint> diagnostic_scatter(const MlpModel& model,
                                                    const std::vector<AttackSample>& test) {
    Eigen::MatrixXd x = attack_design_matrix(test);
    Eigen::VectorXd y = attack_label_vector(test);
    Eigen::VectorXd s = mlp_scores(model, x);
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd c = x.rowwise() - mean;
    Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::MatrixXd basis(x.cols(), 2);
    basis.col(0) = es.eigenvectors().col(x.cols() - 1);
    if (x.cols() > 1)
        basis.col(1) = es.eigenvectors().col(x.cols() - 2);
    else
        basis.col(1).setZero();
    for (int k = 0; k < 2; ++k) {  // pin the sign so projections are reproducible
        Eigen::Index mi;
        basis.col(k).cwiseAbs().maxCoeff(&mi);
        if (basis(mi, k) < 0.0) basis.col(k) = -basis.col(k);
    }
    Eigen::MatrixXd p = c * basis;
    std::vector<ScatterPoint> out(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Eigen::Index e = static_cast<Eigen::Index>(i);
        const bool linked = y(e) > 0.5;
        const bool predicted_link = s(e) >= 0.5;
        out[i].x = p(e, 0);
        out[i].y = p(e, 1);
        out[i].group = !linked ? (!predicted_link ? "TP" : "FN") : (predicted_link ? "TN" : "FP");
    }
    return out;
}

inline void save_scatter_csv(const std::vector<ScatterPoint>& pts, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "x,y,group\n";
    char buf[128];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", p.x, p.y);
        f << buf << p.group << "\n";
    }
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

} // namespace linkthief

#endif
