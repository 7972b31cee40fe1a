#ifndef LINKTHIEF_SIMILARITY_HPP
#define LINKTHIEF_SIMILARITY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace linkthief {

/// Pairwise posterior comparison features. All entries are symmetric in the
/// two inputs and finite for any pair of probability vectors; probability
/// terms inside logs are clamped to [1e-12, 1] so divergences stay finite at
/// hard zeros.
using MetricFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

namespace simdet {

constexpr double kProbFloor = 1e-12;

inline double clampp(double x) { return std::max(x, kProbFloor); }

inline double kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double pi = clampp(p[i]);
        s += pi * std::log(pi / clampp(q[i]));
    }
    return s;
}

inline int argmax(const Eigen::VectorXd& v) {
    Eigen::Index a;
    v.maxCoeff(&a);
    return static_cast<int>(a);
}

} // namespace simdet

inline double cosine_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    const double np = p.norm(), nq = q.norm();
    if (np < 1e-300 || nq < 1e-300) return 0.0;
    return 1.0 - p.dot(q) / (np * nq);
}

inline double euclidean_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return (p - q).norm();
}

inline double squared_euclidean(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return (p - q).squaredNorm();
}

inline double manhattan_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return (p - q).cwiseAbs().sum();
}

inline double chebyshev_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return (p - q).cwiseAbs().maxCoeff();
}

inline double canberra_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double den = std::abs(p[i]) + std::abs(q[i]);
        if (den > 0.0) s += std::abs(p[i] - q[i]) / den;
    }
    return s;
}

inline double braycurtis_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    const double den = (p + q).cwiseAbs().sum();
    if (den <= 0.0) return 0.0;
    return (p - q).cwiseAbs().sum() / den;
}

/// 1 - Pearson correlation of the entries; defined as 0 when either vector is
/// constant (zero variance).
inline double correlation_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    const double mp = p.mean(), mq = q.mean();
    Eigen::VectorXd cp = p.array() - mp;
    Eigen::VectorXd cq = q.array() - mq;
    const double np = cp.norm(), nq = cq.norm();
    if (np < 1e-12 || nq < 1e-12) return 0.0;
    return 1.0 - cp.dot(cq) / (np * nq);
}

/// Square root of the Jensen-Shannon divergence in nats; bounded by
/// sqrt(ln 2).
inline double jensen_shannon_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    Eigen::VectorXd m = 0.5 * (p + q);
    const double js = 0.5 * simdet::kl(p, m) + 0.5 * simdet::kl(q, m);
    return std::sqrt(std::max(js, 0.0));
}

inline double symmetric_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return simdet::kl(p, q) + simdet::kl(q, p);
}

inline double hellinger_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(std::max(p[i], 0.0)) - std::sqrt(std::max(q[i], 0.0));
        s += d * d;
    }
    return std::sqrt(s) / std::sqrt(2.0);
}

/// 1 when both vectors put their largest mass on the same index, else 0.
/// Ties resolve to the lowest index on both sides, keeping the result
/// symmetric.
inline double argmax_agreement(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return simdet::argmax(p) == simdet::argmax(q) ? 1.0 : 0.0;
}

struct NamedMetric {
    std::string name;
    MetricFn fn;
};

/// The default feature set, in the order emitted to feature files.
inline const std::vector<NamedMetric>& default_similarity_metrics() {
    static const std::vector<NamedMetric> metrics = {
        {"cosine", cosine_distance},
        {"euclidean", euclidean_distance},
        {"sqeuclidean", squared_euclidean},
        {"manhattan", manhattan_distance},
        {"chebyshev", chebyshev_distance},
        {"canberra", canberra_distance},
        {"braycurtis", braycurtis_distance},
        {"correlation", correlation_distance},
        {"jensenshannon", jensen_shannon_distance},
        {"symkl", symmetric_kl},
        {"hellinger", hellinger_distance},
        {"argmax-agree", argmax_agreement},
    };
    return metrics;
}

inline const NamedMetric& similarity_metric_by_name(const std::string& name) {
    for (const auto& m : default_similarity_metrics())
        if (m.name == name) return m;
    throw std::invalid_argument("unknown similarity metric: " + name);
}

/// Resolve a comma-separated metric list; empty selects the full default set.
inline std::vector<NamedMetric> resolve_similarity_metrics(const std::string& csv) {
    if (csv.empty()) return default_similarity_metrics();
    std::vector<NamedMetric> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        auto next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        std::string name = csv.substr(pos, next - pos);
        if (!name.empty()) out.push_back(similarity_metric_by_name(name));
        pos = next + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty similarity metric list");
    return out;
}

inline Eigen::VectorXd similarity_features(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                           const std::vector<NamedMetric>& metrics) {
    if (p.size() != q.size())
        throw std::invalid_argument("similarity_features: posterior lengths differ");
    if (p.size() == 0) throw std::invalid_argument("similarity_features: empty posteriors");
    if (!p.allFinite() || !q.allFinite())
        throw std::invalid_argument("similarity_features: non-finite posterior entries");
    Eigen::VectorXd out(static_cast<Eigen::Index>(metrics.size()));
    for (std::size_t i = 0; i < metrics.size(); ++i) out[static_cast<Eigen::Index>(i)] = metrics[i].fn(p, q);
    return out;
}

} // namespace linkthief

#endif
