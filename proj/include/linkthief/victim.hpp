#ifndef LINKTHIEF_VICTIM_HPP
#define LINKTHIEF_VICTIM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "linkthief/checkpoint.hpp"
#include "linkthief/graph.hpp"
#include "linkthief/nn.hpp"
#include "linkthief/rng.hpp"

namespace linkthief {

/// Two-layer graph convolutional node classifier:
///   P = softmax(A_hat relu(A_hat X W1) W2)
/// trained full batch with cross entropy on a train/val node split.
struct GcnConfig {
    int hidden = 16;
    int epochs = 200;
    double lr = 0.01;
    double weight_decay = 0.0;
    double train_fraction = 0.8;
};

struct GcnModel {
    Eigen::MatrixXd w1;  // in x hidden
    Eigen::MatrixXd w2;  // hidden x classes

    int in_dim() const { return static_cast<int>(w1.rows()); }
    int num_classes() const { return static_cast<int>(w2.cols()); }
};

struct GcnTrainInfo {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    std::vector<double> loss_trace;
    std::vector<int> train_nodes, val_nodes;
};

namespace gcn_detail {

struct Forward {
    Eigen::MatrixXd ax;      // A_hat X
    Eigen::MatrixXd pre1;    // (A_hat X) W1
    Eigen::MatrixXd h;       // relu(pre1)
    Eigen::MatrixXd ah;      // A_hat h
    Eigen::MatrixXd logits;  // (A_hat h) W2
    Eigen::MatrixXd probs;
};

inline Forward forward(const GcnModel& m, const NormAdj& adj, const Eigen::MatrixXd& x) {
    Forward f;
    f.ax = adj.apply(x);
    f.pre1 = f.ax * m.w1;
    f.h = relu(f.pre1);
    f.ah = adj.apply(f.h);
    f.logits = f.ah * m.w2;
    f.probs = softmax_rows(f.logits);
    return f;
}

} // namespace gcn_detail

/// Cross-entropy loss over `mask` nodes plus L2 penalty, with analytic
/// gradients for both weight matrices. Exposed so the gradients can be
/// checked against finite differences.
inline double gcn_loss_and_grad(const GcnModel& m, const NormAdj& adj, const Eigen::MatrixXd& x,
                                const std::vector<int>& labels, const std::vector<int>& mask,
                                double weight_decay, Eigen::MatrixXd& grad_w1,
                                Eigen::MatrixXd& grad_w2) {
    if (mask.empty()) throw std::invalid_argument("gcn: empty training mask");
    auto f = gcn_detail::forward(m, adj, x);
    const double inv = 1.0 / static_cast<double>(mask.size());

    double loss = 0.0;
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(f.logits.rows(), f.logits.cols());
    for (int i : mask) {
        const int y = labels[i];
        loss -= std::log(std::max(f.probs(i, y), 1e-300)) * inv;
        dlogits.row(i) = f.probs.row(i) * inv;
        dlogits(i, y) -= inv;
    }
    loss += 0.5 * weight_decay * (m.w1.squaredNorm() + m.w2.squaredNorm());

    grad_w2 = f.ah.transpose() * dlogits + weight_decay * m.w2;
    Eigen::MatrixXd dah = dlogits * m.w2.transpose();
    Eigen::MatrixXd dh = adj.apply(dah);  // A_hat is symmetric
    Eigen::MatrixXd dpre1 = dh.cwiseProduct(relu_grad_mask(f.pre1));
    grad_w1 = f.ax.transpose() * dpre1 + weight_decay * m.w1;
    return loss;
}

inline GcnModel init_gcn(int in_dim, int hidden, int classes, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "gcn-init"));
    GcnModel m;
    m.w1 = glorot(in_dim, hidden, rng);
    m.w2 = glorot(hidden, classes, rng);
    return m;
}

inline GcnModel train_gcn(const Graph& g, const GcnConfig& cfg, std::uint64_t seed,
                          GcnTrainInfo* info = nullptr) {
    if (!g.has_labels()) throw std::invalid_argument("train_gcn: graph has no labels");
    std::set<int> classes(g.labels.begin(), g.labels.end());
    if (classes.size() < 2)
        throw std::invalid_argument("train_gcn: degenerate task, fewer than 2 classes present");
    const int num_classes = g.num_classes();

    std::vector<int> order(g.num_nodes);
    for (int i = 0; i < g.num_nodes; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "gcn-split"));
    rng.shuffle(order);
    const auto n_train =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.train_fraction * g.num_nodes)));
    std::vector<int> train(order.begin(), order.begin() + static_cast<long>(std::min<std::size_t>(n_train, order.size())));
    std::vector<int> val(order.begin() + static_cast<long>(train.size()), order.end());

    NormAdj adj(g.num_nodes, g.edges);
    GcnModel m = init_gcn(g.feature_dim(), cfg.hidden, num_classes, seed);
    Adam opt1(cfg.lr), opt2(cfg.lr);

    std::vector<double> trace;
    trace.reserve(cfg.epochs);
    Eigen::MatrixXd g1, g2;
    for (int e = 0; e < cfg.epochs; ++e) {
        double loss = gcn_loss_and_grad(m, adj, g.features, g.labels, train, cfg.weight_decay, g1, g2);
        require_finite(g1, "gcn grad w1");
        require_finite(g2, "gcn grad w2");
        opt1.step(m.w1, g1);
        opt2.step(m.w2, g2);
        trace.push_back(loss);
    }

    if (info) {
        auto accuracy = [&](const std::vector<int>& nodes) {
            if (nodes.empty()) return 0.0;
            auto f = gcn_detail::forward(m, adj, g.features);
            int hit = 0;
            for (int i : nodes) {
                Eigen::Index arg;
                f.probs.row(i).maxCoeff(&arg);
                hit += (static_cast<int>(arg) == g.labels[i]);
            }
            return static_cast<double>(hit) / static_cast<double>(nodes.size());
        };
        info->train_accuracy = accuracy(train);
        info->val_accuracy = accuracy(val);
        info->loss_trace = std::move(trace);
        info->train_nodes = std::move(train);
        info->val_nodes = std::move(val);
    }
    return m;
}

/// Black-box query surface: the attack side of the code base only ever sees
/// the posterior matrix this returns, never the model weights.
inline Eigen::MatrixXd query_posteriors(const GcnModel& m, const Graph& g) {
    if (g.feature_dim() != m.in_dim())
        throw std::invalid_argument("query_posteriors: feature width does not match model input");
    NormAdj adj(g.num_nodes, g.edges);
    auto f = gcn_detail::forward(m, adj, g.features);
    require_finite(f.probs, "posteriors");
    return f.probs;
}

inline void save_gcn(const GcnModel& m, const std::string& path) {
    Checkpoint ck;
    ck.put("w1", m.w1);
    ck.put("w2", m.w2);
    ck.save(path);
}

inline GcnModel load_gcn(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    GcnModel m;
    m.w1 = ck.get("w1");
    m.w2 = ck.get("w2");
    return m;
}

} // namespace linkthief

#endif
