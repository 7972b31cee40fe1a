#ifndef LINKTHIEF_NN_HPP
#define LINKTHIEF_NN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "linkthief/graph.hpp"
#include "linkthief/rng.hpp"

namespace linkthief {

/// Symmetrically normalized adjacency with self loops, stored as triplets:
/// A_hat = D~^{-1/2} (A + I) D~^{-1/2}. Applying it is a sparse row mix, and
/// because it is symmetric the same operator serves as its own transpose in
/// backward passes.
struct NormAdj {
    int n = 0;
    std::vector<int> row, col;
    std::vector<double> w;

    NormAdj() = default;
    NormAdj(int num_nodes, const EdgeList& edges) : n(num_nodes) {
        std::vector<double> deg(n, 1.0);  // self loop included
        for (auto [u, v] : edges) {
            deg[u] += 1.0;
            deg[v] += 1.0;
        }
        auto push = [&](int i, int j) {
            row.push_back(i);
            col.push_back(j);
            w.push_back(1.0 / std::sqrt(deg[i] * deg[j]));
        };
        for (int i = 0; i < n; ++i) push(i, i);
        for (auto [u, v] : edges) {
            push(u, v);
            push(v, u);
        }
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        for (std::size_t t = 0; t < w.size(); ++t) y.row(row[t]) += w[t] * x.row(col[t]);
        return y;
    }
};

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

inline Eigen::MatrixXd relu_grad_mask(const Eigen::MatrixXd& pre) {
    return (pre.array() > 0.0).cast<double>().matrix();
}

inline Eigen::MatrixXd tanh_mat(const Eigen::MatrixXd& x) { return x.array().tanh().matrix(); }

/// Row-wise softmax with max-shift stabilization.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::ArrayXd r = z.row(i).array() - z.row(i).maxCoeff();
        Eigen::ArrayXd e = r.exp();
        p.row(i) = (e / e.sum()).matrix();
    }
    return p;
}

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return x.unaryExpr([](double a) { return sigmoid(a); });
}

/// Glorot-uniform initialized matrix.
inline Eigen::MatrixXd glorot(int rows, int cols, Rng& rng) {
    const double lim = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * lim;
    return w;
}

/// Adam optimizer state for one parameter matrix.
struct Adam {
    double lr = 0.01;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Eigen::MatrixXd m, v;
    long long t = 0;

    explicit Adam(double learning_rate = 0.01) : lr(learning_rate) {}

    void step(Eigen::MatrixXd& w, const Eigen::MatrixXd& g) {
        if (m.size() == 0) {
            m = Eigen::MatrixXd::Zero(w.rows(), w.cols());
            v = Eigen::MatrixXd::Zero(w.rows(), w.cols());
        }
        ++t;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        Eigen::MatrixXd mh = m / c1;
        Eigen::MatrixXd vh = v / c2;
        w.array() -= lr * mh.array() / (vh.array().sqrt() + eps);
    }
};

inline void require_finite(const Eigen::MatrixXd& x, const char* what) {
    if (!x.allFinite()) throw std::runtime_error(std::string(what) + ": non-finite values");
}

} // namespace linkthief

#endif
