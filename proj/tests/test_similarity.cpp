#include <catch2/catch_amalgamated.hpp>

#include "linkthief/similarity.hpp"

using namespace linkthief;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

} // namespace

TEST_CASE("metric values match reference implementations") {
    // Oracle values computed independently with scipy.spatial.distance and
    // scipy.stats.entropy for p = (0.7, 0.2, 0.1), q = (0.1, 0.6, 0.3).
    const Eigen::VectorXd p = vec({0.7, 0.2, 0.1});
    const Eigen::VectorXd q = vec({0.1, 0.6, 0.3});
    const double tol = 1e-12;
    CHECK(cosine_distance(p, q) == Catch::Approx(0.55858520535217959).epsilon(tol));
    CHECK(euclidean_distance(p, q) == Catch::Approx(0.74833147735478822).epsilon(tol));
    CHECK(squared_euclidean(p, q) == Catch::Approx(0.55999999999999994).epsilon(tol));
    CHECK(manhattan_distance(p, q) == Catch::Approx(1.2).epsilon(tol));
    CHECK(chebyshev_distance(p, q) == Catch::Approx(0.6).epsilon(tol));
    CHECK(canberra_distance(p, q) == Catch::Approx(1.75).epsilon(tol));
    CHECK(braycurtis_distance(p, q) == Catch::Approx(0.6).epsilon(tol));
    CHECK(correlation_distance(p, q) == Catch::Approx(1.7004727969157796).epsilon(tol));
    CHECK(jensen_shannon_distance(p, q) == Catch::Approx(0.45281125128036032).epsilon(tol));
    CHECK(symmetric_kl(p, q) == Catch::Approx(1.8267134626340535).epsilon(tol));
    CHECK(hellinger_distance(p, q) == Catch::Approx(0.46455314725322627).epsilon(tol));
    CHECK(argmax_agreement(p, q) == 0.0);
    CHECK(argmax_agreement(p, vec({0.5, 0.3, 0.2})) == 1.0);
}

TEST_CASE("every metric is symmetric and zero at identical inputs") {
    const Eigen::VectorXd p = vec({0.25, 0.55, 0.2});
    const Eigen::VectorXd q = vec({0.05, 0.05, 0.9});
    for (const auto& m : default_similarity_metrics()) {
        INFO(m.name);
        CHECK(m.fn(p, q) == Catch::Approx(m.fn(q, p)).margin(1e-15));
        const double self = m.fn(p, p);
        if (m.name == "argmax-agree")
            CHECK(self == 1.0);
        else
            CHECK(self == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("divergences stay finite on hard-zero posteriors") {
    const Eigen::VectorXd p = vec({1.0, 0.0, 0.0});
    const Eigen::VectorXd q = vec({0.0, 0.0, 1.0});
    for (const auto& m : default_similarity_metrics()) {
        INFO(m.name);
        CHECK(std::isfinite(m.fn(p, q)));
    }
    CHECK(jensen_shannon_distance(p, q) == Catch::Approx(std::sqrt(std::log(2.0))).margin(1e-9));
    CHECK(hellinger_distance(p, q) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("constant vectors do not break correlation or cosine") {
    const Eigen::VectorXd c = vec({0.5, 0.5});
    CHECK(correlation_distance(c, vec({0.9, 0.1})) == 0.0);
    CHECK(cosine_distance(vec({0.0, 0.0}), vec({0.9, 0.1})) == 0.0);
}

TEST_CASE("argmax agreement resolves ties to the lowest index") {
    CHECK(argmax_agreement(vec({0.4, 0.4, 0.2}), vec({0.5, 0.2, 0.3})) == 1.0);
    CHECK(argmax_agreement(vec({0.4, 0.4, 0.2}), vec({0.2, 0.5, 0.3})) == 0.0);
}

TEST_CASE("the default metric family has a stable order") {
    const auto& ms = default_similarity_metrics();
    REQUIRE(ms.size() == 12);
    CHECK(ms.front().name == "cosine");
    CHECK(ms.back().name == "argmax-agree");
}

TEST_CASE("metric resolution by name and list") {
    CHECK(similarity_metric_by_name("hellinger").name == "hellinger");
    CHECK_THROWS_AS(similarity_metric_by_name("nope"), std::invalid_argument);

    auto subset = resolve_similarity_metrics("cosine,symkl");
    REQUIRE(subset.size() == 2);
    CHECK(subset[0].name == "cosine");
    CHECK(subset[1].name == "symkl");
    CHECK(resolve_similarity_metrics("").size() == 12);
    CHECK_THROWS_AS(resolve_similarity_metrics(",,"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_similarity_metrics("cosine,nope"), std::invalid_argument);
}

TEST_CASE("feature vectors follow the metric list and validate input") {
    const Eigen::VectorXd p = vec({0.7, 0.2, 0.1});
    const Eigen::VectorXd q = vec({0.1, 0.6, 0.3});
    auto feats = similarity_features(p, q, default_similarity_metrics());
    REQUIRE(feats.size() == 12);
    CHECK(feats[0] == cosine_distance(p, q));
    CHECK(feats[11] == argmax_agreement(p, q));

    CHECK_THROWS_AS(similarity_features(p, vec({0.5, 0.5}), default_similarity_metrics()),
                    std::invalid_argument);
    CHECK_THROWS_AS(similarity_features(Eigen::VectorXd(), Eigen::VectorXd(),
                                        default_similarity_metrics()),
                    std::invalid_argument);
    Eigen::VectorXd bad = p;
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(similarity_features(bad, q, default_similarity_metrics()),
                    std::invalid_argument);
}
