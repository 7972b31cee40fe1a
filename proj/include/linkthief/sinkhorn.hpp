#ifndef LINKTHIEF_SINKHORN_HPP
#define LINKTHIEF_SINKHORN_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace linkthief {

/// Entropy-regularized optimal transport between two weighted point clouds
/// under the Euclidean ground cost, solved with log-domain scaling updates so
/// small regularization strengths stay numerically stable.
struct SinkhornResult {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct SinkhornPlan {
    Eigen::MatrixXd plan;  // rows sum to a, cols to b at convergence
    Eigen::MatrixXd cost;  // pairwise Euclidean distances
    SinkhornResult info;
};

inline Eigen::MatrixXd pairwise_euclidean(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys) {
    Eigen::MatrixXd c(xs.rows(), ys.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        for (Eigen::Index j = 0; j < ys.rows(); ++j) c(i, j) = (xs.row(i) - ys.row(j)).norm();
    return c;
}

namespace otdet {

/// Row-wise log-sum-exp of m + broadcast column vector add, with max shift.
inline Eigen::VectorXd lse_rows(const Eigen::MatrixXd& m) {
    Eigen::VectorXd out(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double mx = m.row(i).maxCoeff();
        if (!std::isfinite(mx)) {
            out[i] = mx;
            continue;
        }
        out[i] = mx + std::log((m.row(i).array() - mx).exp().sum());
    }
    return out;
}

} // namespace otdet

inline SinkhornPlan sinkhorn_plan(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                                  double epsilon, int max_iters,
                                  const Eigen::VectorXd& a_in = Eigen::VectorXd(),
                                  const Eigen::VectorXd& b_in = Eigen::VectorXd(),
                                  double tol = 1e-9) {
    if (xs.rows() == 0 || ys.rows() == 0)
        throw std::invalid_argument("sinkhorn: empty point set");
    if (xs.cols() != ys.cols())
        throw std::invalid_argument("sinkhorn: point dimensions differ");
    if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("sinkhorn: iteration cap must be >= 1");

    const Eigen::Index n = xs.rows(), m = ys.rows();
    Eigen::VectorXd a = a_in.size() ? a_in : Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd b = b_in.size() ? b_in : Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    if (a.size() != n || b.size() != m) throw std::invalid_argument("sinkhorn: weight sizes differ");
    if (a.minCoeff() <= 0.0 || b.minCoeff() <= 0.0)
        throw std::invalid_argument("sinkhorn: weights must be positive");

    SinkhornPlan out;
    out.cost = pairwise_euclidean(xs, ys);
    const Eigen::VectorXd la = a.array().log();
    const Eigen::VectorXd lb = b.array().log();

    Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd k(n, m);
    int it = 0;
    bool converged = false;
    for (; it < max_iters; ++it) {
        // f update: row-wise over (g_j - C_ij)/eps + log b_j
        k = (out.cost * (-1.0 / epsilon)).eval();
        k.rowwise() += (g / epsilon + lb).transpose();
        f = -epsilon * otdet::lse_rows(k);
        // g update
        k = (out.cost.transpose() * (-1.0 / epsilon)).eval();
        k.rowwise() += (f / epsilon + la).transpose();
        g = -epsilon * otdet::lse_rows(k);

        // marginal violation of the implied plan
        Eigen::MatrixXd logp = (-out.cost) / epsilon;
        logp.colwise() += f / epsilon + la;
        logp.rowwise() += (g / epsilon + lb).transpose();
        Eigen::MatrixXd plan = logp.array().exp().matrix();
        const double err = (plan.rowwise().sum() - a).cwiseAbs().maxCoeff();
        if (err < tol) {
            out.plan = std::move(plan);
            converged = true;
            ++it;
            break;
        }
        if (it + 1 == max_iters) out.plan = std::move(plan);
    }
    if (out.plan.size() == 0) {
        Eigen::MatrixXd logp = (-out.cost) / epsilon;
        logp.colwise() += f / epsilon + la;
        logp.rowwise() += (g / epsilon + lb).transpose();
        out.plan = logp.array().exp().matrix();
    }
    out.info.value = std::max(out.plan.cwiseProduct(out.cost).sum(), 0.0);
    out.info.converged = converged;
    out.info.iterations = it;
    return out;
}

inline SinkhornResult sinkhorn_distance(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                                        double epsilon, int max_iters,
                                        const Eigen::VectorXd& a = Eigen::VectorXd(),
                                        const Eigen::VectorXd& b = Eigen::VectorXd()) {
    return sinkhorn_plan(xs, ys, epsilon, max_iters, a, b).info;
}

/// Envelope gradient of the transport cost with respect to the left point
/// cloud, holding the converged plan fixed: sum_j plan_ij (x_i - y_j)/|x_i - y_j|.
inline Eigen::MatrixXd transport_grad_left(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                                           const Eigen::MatrixXd& plan) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(xs.rows(), xs.cols());
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        for (Eigen::Index j = 0; j < ys.rows(); ++j) {
            Eigen::RowVectorXd diff = xs.row(i) - ys.row(j);
            const double d = diff.norm();
            if (d > 1e-12) grad.row(i) += plan(i, j) / d * diff;
        }
    return grad;
}

inline Eigen::MatrixXd transport_grad_right(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                                            const Eigen::MatrixXd& plan) {
    return transport_grad_left(ys, xs, plan.transpose());
}

} // namespace linkthief

#endif
