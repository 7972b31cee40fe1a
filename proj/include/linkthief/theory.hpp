#ifndef LINKTHIEF_THEORY_HPP
#define LINKTHIEF_THEORY_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkthief/graph.hpp"
#include "linkthief/nn.hpp"
#include "linkthief/rng.hpp"

namespace linkthief {

/// Closed-form privacy-theft quantities for contextual stochastic block
/// models: how far one step of normalized neighborhood averaging moves the
/// node representation distribution away from the raw feature distribution,
/// measured as a squared 2-Wasserstein distance between Gaussians. `n` plays
/// the role of the per-class population, so empirical checks sample 2n nodes.

namespace theory_detail {

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw std::domain_error(std::string(what) + ": eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-8 * scale)
            throw std::domain_error(std::string(what) + ": matrix is not positive semi-definite");
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline void check_cov(const Eigen::MatrixXd& s, const char* what) {
    if (s.rows() != s.cols()) throw std::invalid_argument(std::string(what) + ": covariance must be square");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw std::domain_error(std::string(what) + ": covariance must be symmetric");
}

} // namespace theory_detail

/// Squared 2-Wasserstein distance between N(mu_p, sigma_p) and N(mu_q, sigma_q):
/// |mu_p - mu_q|^2 + tr(sigma_p) + tr(sigma_q) - 2 tr((sigma_p^1/2 sigma_q sigma_p^1/2)^1/2).
inline double gaussian_wasserstein(const Eigen::VectorXd& mu_p, const Eigen::MatrixXd& sigma_p,
                                   const Eigen::VectorXd& mu_q, const Eigen::MatrixXd& sigma_q) {
    theory_detail::check_cov(sigma_p, "gaussian_wasserstein");
    theory_detail::check_cov(sigma_q, "gaussian_wasserstein");
    if (mu_p.size() != mu_q.size() || sigma_p.rows() != mu_p.size() ||
        sigma_q.rows() != mu_q.size())
        throw std::invalid_argument("gaussian_wasserstein: dimension mismatch");
    Eigen::MatrixXd rp = theory_detail::psd_sqrt(sigma_p, "gaussian_wasserstein");
    Eigen::MatrixXd inner = rp * sigma_q * rp;
    inner = ((inner + inner.transpose()) / 2.0).eval();
    Eigen::MatrixXd cross = theory_detail::psd_sqrt(inner, "gaussian_wasserstein");
    const double val =
        (mu_p - mu_q).squaredNorm() + sigma_p.trace() + sigma_q.trace() - 2.0 * cross.trace();
    return std::max(val, 0.0);
}

/// Privacy theft when the adversary trains on the target's own distribution:
/// d mu^2 / (np)^2 + d (sqrt(np+1)/(np) - 1)^2.
inline double pt_optimal(const CsbmParams& p) {
    validate(p);
    const double np = static_cast<double>(p.n) * p.p;
    if (np <= 0.0) throw std::domain_error("pt_optimal: requires n*p > 0");
    const double mean_term = p.d * p.mu * p.mu / (np * np);
    const double sd_ratio = std::sqrt(np + 1.0) / np;
    return mean_term + p.d * (sd_ratio - 1.0) * (sd_ratio - 1.0);
}

/// Privacy theft when neighborhoods mix both classes:
/// d mu^2 [ (1+k)/(2 n(p+q)) + (p-q)/(p+q) * (1-k)/2 ]^2
///   + d (sqrt(n(p+q)+1)/(n(p+q)) - 1)^2.
inline double pt_general(const CsbmParams& p) {
    validate(p);
    const double npq = static_cast<double>(p.n) * (p.p + p.q);
    if (npq <= 0.0) throw std::domain_error("pt_general: requires n*(p+q) > 0");
    const double bracket =
        (1.0 + p.k) / (2.0 * npq) + (p.p - p.q) / (p.p + p.q) * (1.0 - p.k) / 2.0;
    const double sd_ratio = std::sqrt(npq + 1.0) / npq;
    return p.d * p.mu * p.mu * bracket * bracket + p.d * (sd_ratio - 1.0) * (sd_ratio - 1.0);
}

/// Closed form for pt_optimal - pt_general at k = 1, written in terms of the
/// within-class edge share D = p/(p+q):
/// d [ (1+D)/(np)^2 * mu^2 + (np+1+D)(B-2np) / ((np)^2 B) ] (1-D),
/// with B = sqrt(np+1) + sqrt(np D + D^2).
inline double delta_pt(const CsbmParams& p) {
    validate(p);
    if (p.k != 1.0)
        throw std::invalid_argument("delta_pt: closed form assumes equal class feature scales (k = 1)");
    const double np = static_cast<double>(p.n) * p.p;
    if (np <= 0.0 || p.p + p.q <= 0.0)
        throw std::domain_error("delta_pt: requires n*p > 0 and p+q > 0");
    const double dsh = p.p / (p.p + p.q);
    const double b = std::sqrt(np + 1.0) + std::sqrt(np * dsh + dsh * dsh);
    const double inner = (1.0 + dsh) / (np * np) * p.mu * p.mu +
                         (np + 1.0 + dsh) * (b - 2.0 * np) / (np * np * b);
    return p.d * inner * (1.0 - dsh);
}

/// One step of symmetric-normalized propagation with self-loops; the
/// "1-layer, no nonlinearity" regime the closed forms describe.
inline Eigen::MatrixXd propagate_once(int num_nodes, const EdgeList& edges,
                                      const Eigen::MatrixXd& feats) {
    return NormAdj(num_nodes, edges).apply(feats);
}

/// Per-dimension Gaussian fit to a population of row vectors. Variances below
/// 1e-12 get a 1e-6 jitter so downstream matrix square roots stay stable.
inline void fit_diagonal_gaussian(const Eigen::MatrixXd& rows, Eigen::VectorXd& mean,
                                  Eigen::VectorXd& var) {
    if (rows.rows() < 2) throw std::invalid_argument("fit_diagonal_gaussian: need at least 2 samples");
    mean = rows.colwise().mean();
    Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
    var = centered.array().square().colwise().mean();
    for (int i = 0; i < var.size(); ++i)
        if (var(i) < 1e-12) var(i) += 1e-6;
}

/// Monte-Carlo estimate of privacy theft: sample a 2n-node two-class graph,
/// propagate once, fit diagonal Gaussians to the pre/post populations, and
/// measure their Gaussian Wasserstein distance.
inline double empirical_pt(const CsbmParams& p, std::uint64_t seed) {
    CsbmParams gen = p;
    gen.n = 2 * p.n;
    Graph g = generate_csbm(gen, seed);
    Eigen::MatrixXd z = propagate_once(g.num_nodes, g.edges, g.features);
    Eigen::VectorXd mx, vx, mz, vz;
    fit_diagonal_gaussian(g.features, mx, vx);
    fit_diagonal_gaussian(z, mz, vz);
    return gaussian_wasserstein(mx, Eigen::MatrixXd(vx.asDiagonal()), mz,
                                Eigen::MatrixXd(vz.asDiagonal()));
}

struct PrivacyTheftReport {
    CsbmParams params;
    double density = 0.0;  // D = p/(p+q)
    double pt_opt = 0.0;
    double pt_gen = 0.0;
    double delta = std::numeric_limits<double>::quiet_NaN();  // defined only at k = 1
    double empirical = 0.0;
    double stderr_empirical = 0.0;
};

/// Evaluate every grid point analytically and by Monte-Carlo. Each point uses
/// independent derived seeds, so points may be computed in any order.
inline std::vector<PrivacyTheftReport> verify_proposition(const std::vector<CsbmParams>& grid,
                                                          int trials, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("verify_proposition: empty parameter grid");
    if (trials < 10) throw std::invalid_argument("verify_proposition: need at least 10 trials");
    std::vector<PrivacyTheftReport> out;
    out.reserve(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const CsbmParams& p = grid[gi];
        PrivacyTheftReport r;
        r.params = p;
        r.density = p.p / (p.p + p.q);
        r.pt_opt = pt_optimal(p);
        r.pt_gen = pt_general(p);
        if (p.k == 1.0) r.delta = delta_pt(p);
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < trials; ++t) {
            double v = empirical_pt(
                p, derive_seed(seed, "pt-grid-" + std::to_string(gi) + "-" + std::to_string(t)));
            sum += v;
            sumsq += v * v;
        }
        r.empirical = sum / trials;
        const double var = std::max(sumsq / trials - r.empirical * r.empirical, 0.0);
        r.stderr_empirical = std::sqrt(var / trials);
        if (!std::isfinite(r.pt_opt) || !std::isfinite(r.pt_gen) || !std::isfinite(r.empirical))
            throw std::runtime_error("verify_proposition: non-finite value at grid point " +
                                     std::to_string(gi));
        out.push_back(r);
    }
    return out;
}

inline void save_theory_csv(const std::vector<PrivacyTheftReport>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "n,p,q,k,D,pt_opt,pt_general,delta_pt,empirical_pt,stderr\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.params.n, r.params.p, r.params.q, r.params.k, r.density, r.pt_opt, r.pt_gen,
                      r.delta, r.empirical, r.stderr_empirical);
        f << buf;
    }
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

} // namespace linkthief

#endif
