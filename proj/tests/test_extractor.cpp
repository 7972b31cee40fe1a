#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "linkthief/extractor.hpp"
#include "linkthief/rng.hpp"

using namespace linkthief;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, Rng& rng) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

std::set<std::pair<int, int>> edge_set(const EdgeList& edges) {
    std::set<std::pair<int, int>> s;
    for (auto [u, v] : edges) s.insert(std::minmax(u, v));
    return s;
}

/// Linear probe of the encoder outputs; checking its gradient validates the
/// backward pass for arbitrary upstream gradients (dz, ds).
double linear_objective(const ExtractorState& st, const Eigen::MatrixXd& feats,
                        const EdgeList& edges, const Eigen::MatrixXd& cz,
                        const Eigen::VectorXd& cs) {
    EncodeTrace t = encode_subgraph(st, feats, edges);
    return t.z.cwiseProduct(cz).sum() + t.s.dot(cs);
}

} // namespace

TEST_CASE("similarity view links mutual nearest directions") {
    Eigen::MatrixXd feats(4, 2);
    feats << 1, 0, 0.9, 0.1, 0, 1, -0.1, 1;
    EdgeList view = build_similarity_view(feats, 1);
    CHECK(edge_set(view) == std::set<std::pair<int, int>>{{0, 1}, {2, 3}});

    SECTION("k clips to n - 1 and yields the complete graph") {
        Eigen::MatrixXd f3 = feats.topRows(3);
        EdgeList all = build_similarity_view(f3, 10);
        CHECK(edge_set(all) == std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
    }

    SECTION("ties resolve to the lowest index") {
        Eigen::MatrixXd same(3, 2);
        same << 2, 1, 2, 1, 2, 1;
        EdgeList v = build_similarity_view(same, 1);
        CHECK(edge_set(v) == std::set<std::pair<int, int>>{{0, 1}, {0, 2}});
    }

    SECTION("zero rows stay finite and act like zero similarity") {
        Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 2);
        EdgeList v = build_similarity_view(zero, 1);
        CHECK(edge_set(v) == std::set<std::pair<int, int>>{{0, 1}, {0, 2}});
    }

    SECTION("degenerate sizes") {
        CHECK(build_similarity_view(Eigen::MatrixXd::Zero(1, 2), 3).empty());
        CHECK(build_similarity_view(Eigen::MatrixXd(0, 2), 3).empty());
        CHECK_THROWS_AS(build_similarity_view(feats, 0), std::invalid_argument);
    }
}

TEST_CASE("default extractor geometry matches the documented layout") {
    ExtractorConfig cfg;
    REQUIRE(cfg.channels == std::vector<int>{32, 32, 1});
    ExtractorState st = init_extractor(cfg, 24, 7);
    CHECK(st.width() == 65);
    CHECK(st.feature_length() == 650);
    REQUIRE(st.w.size() == 3);
    CHECK(st.w[0].rows() == 24);
    CHECK(st.w[0].cols() == 32);
    CHECK(st.w[1].rows() == 32);
    CHECK(st.w[1].cols() == 32);
    CHECK(st.w[2].rows() == 32);
    CHECK(st.w[2].cols() == 1);
    CHECK(st.psi.rows() == 65);
    CHECK(st.psi.cols() == 650);

    ExtractorState again = init_extractor(cfg, 24, 7);
    CHECK(again.psi == st.psi);
    for (std::size_t l = 0; l < st.w.size(); ++l) CHECK(again.w[l] == st.w[l]);
    ExtractorState other = init_extractor(cfg, 24, 8);
    CHECK(other.psi != st.psi);
}

TEST_CASE("extractor configuration is validated") {
    ExtractorConfig cfg;
    cfg.pool_size = 0;
    CHECK_THROWS_AS(init_extractor(cfg, 4, 1), std::invalid_argument);
    cfg = ExtractorConfig{};
    cfg.knn_k = 0;
    CHECK_THROWS_AS(init_extractor(cfg, 4, 1), std::invalid_argument);
    cfg = ExtractorConfig{};
    cfg.channels.clear();
    CHECK_THROWS_AS(init_extractor(cfg, 4, 1), std::invalid_argument);
    cfg = ExtractorConfig{};
    cfg.channels = {8, 0};
    CHECK_THROWS_AS(init_extractor(cfg, 4, 1), std::invalid_argument);
}

TEST_CASE("encoding pools the top-ranked rows and zero pads short subgraphs") {
    ExtractorConfig cfg;
    cfg.channels = {3, 1};
    cfg.pool_size = 5;
    ExtractorState st = init_extractor(cfg, 4, 11);
    Rng rng(3);
    Eigen::MatrixXd feats = random_matrix(3, 4, rng);
    EdgeList edges{{0, 1}, {1, 2}};

    EncodeTrace t = encode_subgraph(st, feats, edges);
    const int width = st.width();
    REQUIRE(t.z.rows() == 3);
    REQUIRE(t.z.cols() == width);
    REQUIRE(t.s.size() == width * 5);

    // tanh keeps every embedding entry inside (-1, 1).
    CHECK(t.z.cwiseAbs().maxCoeff() < 1.0);

    // Ranking is by the final channel, descending.
    const Eigen::VectorXd key = t.z.col(width - 1);
    REQUIRE(t.order.size() == 3);
    CHECK(key[t.order[0]] >= key[t.order[1]]);
    CHECK(key[t.order[1]] >= key[t.order[2]]);
    for (int r = 0; r < 3; ++r)
        CHECK((t.s.segment(r * width, width).transpose() - t.z.row(t.order[r])).norm() == 0.0);

    // Rows past the subgraph size stay zero padded.
    CHECK(t.s.tail(2 * width).isZero());

    CHECK_THROWS_AS(encode_subgraph(st, Eigen::MatrixXd::Zero(3, 5), edges),
                    std::invalid_argument);
    CHECK_THROWS_AS(encode_subgraph(st, Eigen::MatrixXd(0, 4), {}), std::invalid_argument);
}

TEST_CASE("pooled features are invariant to node relabeling") {
    ExtractorConfig cfg;
    cfg.channels = {4, 1};
    cfg.pool_size = 4;
    ExtractorState st = init_extractor(cfg, 5, 21);
    Rng rng(99);

    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng.uniform_int(6));
        Eigen::MatrixXd feats = random_matrix(n, 5, rng);
        EdgeList edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (rng.uniform() < 0.4) edges.emplace_back(u, v);

        std::vector<int> q(n);
        std::iota(q.begin(), q.end(), 0);
        rng.shuffle(q);
        Eigen::MatrixXd pfeats(n, 5);
        for (int i = 0; i < n; ++i) pfeats.row(q[i]) = feats.row(i);
        EdgeList pedges;
        for (auto [u, v] : edges) pedges.emplace_back(q[u], q[v]);

        Eigen::VectorXd s1 = encode_subgraph(st, feats, edges).s;
        Eigen::VectorXd s2 = encode_subgraph(st, pfeats, pedges).s;
        REQUIRE((s1 - s2).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("discriminator gradients match finite differences") {
    Rng rng(17);
    const int n = 5, width = 4, slen = 6;
    Eigen::MatrixXd psi = 0.3 * random_matrix(width, slen, rng);
    Eigen::MatrixXd z = random_matrix(n, width, rng);
    Eigen::MatrixXd zn = random_matrix(n, width, rng);
    Eigen::VectorXd s = random_matrix(slen, 1, rng);

    MiGrads g = mi_backward(psi, z, s, zn);
    CHECK(g.value == Catch::Approx(mi_estimate(psi, z, s, zn)).margin(1e-14));

    const double h = 1e-6;
    auto fd = [&](auto&& mutate_plus, auto&& mutate_minus) {
        mutate_plus();
        const double up = mi_estimate(psi, z, s, zn);
        mutate_minus();
        mutate_minus();
        const double dn = mi_estimate(psi, z, s, zn);
        mutate_plus();
        return (up - dn) / (2 * h);
    };

    for (int i = 0; i < width; ++i)
        for (int j = 0; j < slen; ++j) {
            const double want = fd([&] { psi(i, j) += h; }, [&] { psi(i, j) -= h; });
            REQUIRE(g.dpsi(i, j) == Catch::Approx(want).margin(1e-7));
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < width; ++j) {
            double want = fd([&] { z(i, j) += h; }, [&] { z(i, j) -= h; });
            REQUIRE(g.dz(i, j) == Catch::Approx(want).margin(1e-7));
            want = fd([&] { zn(i, j) += h; }, [&] { zn(i, j) -= h; });
            REQUIRE(g.dz_neg(i, j) == Catch::Approx(want).margin(1e-7));
        }
    for (int j = 0; j < slen; ++j) {
        const double want = fd([&] { s(j) += h; }, [&] { s(j) -= h; });
        REQUIRE(g.ds(j) == Catch::Approx(want).margin(1e-7));
    }

    CHECK_THROWS_AS(mi_estimate(psi, z, s, zn.topRows(2)), std::invalid_argument);
    CHECK_THROWS_AS(mi_estimate(psi, Eigen::MatrixXd(0, width), s, Eigen::MatrixXd(0, width)),
                    std::invalid_argument);
}

TEST_CASE("encoder backward pass matches finite differences") {
    ExtractorConfig cfg;
    cfg.channels = {3, 2};
    cfg.pool_size = 2;
    ExtractorState st = init_extractor(cfg, 3, 5);
    Rng rng(31);
    Eigen::MatrixXd feats = random_matrix(5, 3, rng);
    EdgeList edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};

    Eigen::MatrixXd cz = random_matrix(5, st.width(), rng);
    Eigen::VectorXd cs = random_matrix(st.feature_length(), 1, rng);

    EncodeTrace t = encode_subgraph(st, feats, edges);
    // FD only works while the pooling order is stable; the sampled weights
    // give well-separated ranking keys, which this guards.
    Eigen::VectorXd key = t.z.col(st.width() - 1);
    std::vector<double> sorted(key.data(), key.data() + key.size());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) REQUIRE(sorted[i] - sorted[i - 1] > 1e-4);

    std::vector<Eigen::MatrixXd> dw;
    for (const auto& w : st.w) dw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    encode_backward(st, t, cz, cs, dw);

    const double h = 1e-6;
    for (std::size_t l = 0; l < st.w.size(); ++l)
        for (int i = 0; i < st.w[l].rows(); ++i)
            for (int j = 0; j < st.w[l].cols(); ++j) {
                st.w[l](i, j) += h;
                const double up = linear_objective(st, feats, edges, cz, cs);
                st.w[l](i, j) -= 2 * h;
                const double dn = linear_objective(st, feats, edges, cz, cs);
                st.w[l](i, j) += h;
                REQUIRE(dw[l](i, j) == Catch::Approx((up - dn) / (2 * h)).margin(1e-5));
            }
}

TEST_CASE("contrastive training raises the cross-view bound") {
    ExtractorConfig cfg;
    cfg.channels = {4, 1};
    cfg.pool_size = 3;
    cfg.knn_k = 2;
    ExtractorState st = init_extractor(cfg, 5, 2024);

    Rng rng(55);
    std::vector<SubgraphSample> batch;
    for (int b = 0; b < 4; ++b) {
        Eigen::MatrixXd feats = random_matrix(8, 5, rng);
        EdgeList edges;
        for (int u = 0; u < 8; ++u)
            for (int v = u + 1; v < 8; ++v)
                if (rng.uniform() < 0.3) edges.emplace_back(u, v);
        EdgeSubgraph sub;
        sub.nodes.resize(8);
        sub.edges = edges;
        batch.push_back(make_extractor_sample(sub, feats, cfg.knn_k));
        CHECK(batch.back().raw_edges == edges);
        CHECK(edge_set(batch.back().sim_edges) ==
              edge_set(build_similarity_view(feats, cfg.knn_k)));
    }

    auto trace = train_extractor(st, batch, 40, 0.05, 0.05, 91);
    REQUIRE(trace.size() == 40);
    for (double v : trace) REQUIRE(std::isfinite(v));
    CHECK(trace.back() > trace.front());

    SECTION("training is deterministic in the seed") {
        ExtractorState a = init_extractor(cfg, 5, 2024);
        ExtractorState b = init_extractor(cfg, 5, 2024);
        auto ta = train_extractor(a, batch, 5, 0.05, 0.05, 91);
        auto tb = train_extractor(b, batch, 5, 0.05, 0.05, 91);
        CHECK(ta == tb);
        CHECK(a.psi == b.psi);
        for (std::size_t l = 0; l < a.w.size(); ++l) CHECK(a.w[l] == b.w[l]);
    }

    SECTION("zero learning rates leave the weights untouched") {
        ExtractorState frozen = init_extractor(cfg, 5, 2024);
        ExtractorState before = frozen;
        train_extractor(frozen, batch, 3, 0.0, 0.0, 91);
        CHECK(frozen.psi == before.psi);
        for (std::size_t l = 0; l < frozen.w.size(); ++l) CHECK(frozen.w[l] == before.w[l]);
    }

    SECTION("cross-subgraph negatives also train") {
        ExtractorConfig xcfg = cfg;
        xcfg.cross_subgraph_negatives = true;
        ExtractorState xst = init_extractor(xcfg, 5, 2024);
        auto xtrace = train_extractor(xst, batch, 10, 0.05, 0.05, 91);
        for (double v : xtrace) REQUIRE(std::isfinite(v));
    }

    CHECK_THROWS_AS(train_extractor(st, {}, 1, 0.1, 0.1, 1), std::invalid_argument);
}

TEST_CASE("objective and updates are symmetric under exchanging the two views") {
    ExtractorConfig cfg;
    cfg.channels = {3, 1};
    cfg.pool_size = 3;
    Rng rng(77);
    Eigen::MatrixXd feats = random_matrix(7, 4, rng);
    EdgeList raw{{0, 1}, {1, 2}, {2, 3}, {4, 5}, {5, 6}};
    EdgeList sim = build_similarity_view(feats, 2);

    ExtractorState a = init_extractor(cfg, 4, 13);
    ExtractorState b = init_extractor(cfg, 4, 13);
    auto ta = train_extractor(a, {SubgraphSample{feats, raw, sim}}, 4, 0.1, 0.1, 5);
    auto tb = train_extractor(b, {SubgraphSample{feats, sim, raw}}, 4, 0.1, 0.1, 5);

    REQUIRE(ta.size() == tb.size());
    for (std::size_t e = 0; e < ta.size(); ++e)
        CHECK(ta[e] == Catch::Approx(tb[e]).margin(1e-12));
    CHECK((a.psi - b.psi).lpNorm<Eigen::Infinity>() < 1e-12);
    for (std::size_t l = 0; l < a.w.size(); ++l)
        CHECK((a.w[l] - b.w[l]).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("inference features read the observed-adjacency view") {
    ExtractorConfig cfg;
    ExtractorState st = init_extractor(cfg, 6, 3);
    Rng rng(8);
    Eigen::MatrixXd feats = random_matrix(12, 6, rng);
    EdgeList edges{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}, {10, 11}, {0, 11}};

    Eigen::VectorXd f = structure_features(st, feats, edges);
    REQUIRE(f.size() == 650);
    CHECK(f == encode_subgraph(st, feats, edges).s);
}
