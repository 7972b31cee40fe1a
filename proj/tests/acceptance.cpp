#include <linkthief/attack.hpp>
#include <linkthief/bridge.hpp>
#include <linkthief/bridge_graph.hpp>
#include <linkthief/config.hpp>
#include <linkthief/extractor.hpp>
#include <linkthief/graph.hpp>
#include <linkthief/pipeline.hpp>
#include <linkthief/rng.hpp>
#include <linkthief/similarity.hpp>
#include <linkthief/sinkhorn.hpp>
#include <linkthief/subgraph.hpp>
#include <linkthief/theory.hpp>
#include <linkthief/victim.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

// Acceptance suite: nine end-to-end checks, one verdict line each. Criteria
// 1-3 exercise the closed-form analysis, 4-7 run the full attack pipeline at
// desk scale (about an hour in total), 8 cross-checks numeric kernels against
// independent oracles, 9 enforces interface hygiene. Run with criterion
// numbers as arguments to execute a subset, e.g. `acceptance 1 8 9`.

namespace {

using namespace linkthief;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strf(const char* fmt, ...) {
    char buf[1024];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

void note(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    std::fprintf(stderr, "  %s\n", buf);
    std::fflush(stderr);
}

// ---------------------------------------------------------------------------
// Criterion 1: the closed form for pt_optimal - pt_general at k = 1 must match
// the directly computed difference across a random parameter grid.

Outcome criterion1() {
    constexpr double kRelTol = 1e-6;
    constexpr double kTimeCap = 10.0;
    constexpr int kPoints = 100;

    const auto t0 = Clock::now();
    Rng rng(derive_seed(29, "acceptance-grid"));
    double max_rel = 0.0;
    for (int i = 0; i < kPoints; ++i) {
        CsbmParams p;
        p.n = 50 + rng.uniform_int(951);
        p.p = 0.01 + 0.49 * rng.uniform();
        p.q = p.p * (0.001 + 0.999 * rng.uniform());
        p.mu = 0.5 + 2.5 * rng.uniform();
        p.d = 1 + rng.uniform_int(16);
        p.k = 1.0;
        const double direct = pt_optimal(p) - pt_general(p);
        const double closed = delta_pt(p);
        const double rel = std::abs(closed - direct) /
                           std::max({std::abs(closed), std::abs(direct), 1e-30});
        max_rel = std::max(max_rel, rel);
    }
    const double secs = seconds_since(t0);
    Outcome out;
    out.pass = max_rel < kRelTol && secs < kTimeCap;
    out.detail = strf("%d random grid points, max rel err %.3g (tol %g), %.2f s (cap %g s)",
                      kPoints, max_rel, kRelTol, secs, kTimeCap);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: at n=200, p=0.1, q=0.05, mu=1, d=8 the magnitude of
// pt_optimal - pt_general shrinks strictly as k drops toward 1, and the gap is
// exactly zero once k = 1 and the graph has no cross-class links (D = 1).

Outcome criterion2() {
    constexpr double kAgreeRelTol = 1e-12;

    CsbmParams base;
    base.n = 200;
    base.p = 0.1;
    base.q = 0.05;
    base.mu = 1.0;
    base.d = 8;
    const std::array<double, 5> ks{4.0, 3.0, 2.0, 1.5, 1.0};
    std::array<double, 5> gap{};
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CsbmParams p = base;
        p.k = ks[i];
        gap[i] = pt_optimal(p) - pt_general(p);
    }
    bool contracting = true;
    for (std::size_t i = 0; i + 1 < gap.size(); ++i)
        if (!(std::abs(gap[i]) > std::abs(gap[i + 1]))) contracting = false;

    CsbmParams flat = base;
    flat.k = 1.0;
    flat.q = 0.0;  // within-class share D = 1
    const double closed_zero = delta_pt(flat);
    const double agree = std::abs(pt_optimal(flat) - pt_general(flat));
    const bool zero_ok = closed_zero == 0.0 && agree <= kAgreeRelTol * pt_optimal(flat);

    Outcome out;
    out.pass = contracting && zero_ok;
    out.detail = strf("gap at k=4,3,2,1.5,1: %.3e %.3e %.3e %.3e %.3e (|gap| strictly shrinking: %s); "
                      "at k=1,D=1 closed form %.1g, formulas differ by %.2e",
                      gap[0], gap[1], gap[2], gap[3], gap[4], contracting ? "yes" : "no",
                      closed_zero, agree);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: the k = 1 gap decays strictly to zero as the within-class edge
// share D approaches 1 (q sweep p, p/2, p/4, p/10, 0), and the Monte-Carlo
// estimate of privacy theft agrees with the analytic value along that sweep.

Outcome criterion3() {
    constexpr double kMcRelTol = 0.15;
    constexpr int kTrials = 20;

    CsbmParams base;
    base.n = 200;
    base.p = 0.1;
    base.mu = 1.0;
    base.d = 8;
    base.k = 1.0;
    const std::array<double, 5> qs{base.p, base.p / 2, base.p / 4, base.p / 10, 0.0};

    std::array<double, 5> gap{};
    for (std::size_t i = 0; i < qs.size(); ++i) {
        CsbmParams p = base;
        p.q = qs[i];
        gap[i] = delta_pt(p);
    }
    bool decaying = gap.back() == 0.0;
    for (std::size_t i = 0; i + 1 < gap.size(); ++i)
        if (!(std::abs(gap[i]) > std::abs(gap[i + 1]))) decaying = false;

    std::vector<CsbmParams> grid;
    for (double q : qs) {
        CsbmParams p = base;
        p.n = 500;
        p.q = q;
        grid.push_back(p);
    }
    const auto reports = verify_proposition(grid, kTrials, derive_seed(29, "acceptance-mc"));
    double max_mc_rel = 0.0;
    for (const auto& r : reports)
        max_mc_rel = std::max(max_mc_rel, std::abs(r.empirical - r.pt_gen) / r.pt_gen);

    Outcome out;
    out.pass = decaying && max_mc_rel <= kMcRelTol;
    out.detail = strf("gap at q=p..0: %.3e %.3e %.3e %.3e %.1g (|gap| strict decay to zero: %s); "
                      "Monte-Carlo (n=500, %d trials) max rel dev %.3f (tol %.2f)",
                      gap[0], gap[1], gap[2], gap[3], gap[4], decaying ? "yes" : "no", kTrials,
                      max_mc_rel, kMcRelTol);
    return out;
}

// ---------------------------------------------------------------------------
// Criteria 4-7 share one batch of pipeline runs over five fixed seeds.
//
// The run configuration keeps the victim deliberately weak (tiny feature
// shift, two hidden units, few epochs) so posterior similarity alone stays
// near chance, while p = 0.1 with a two-hop subgraph radius keeps enough
// local connectivity inside the leaked graph for the structure path to learn
// from; epoch counts are trimmed so one full run stays under two minutes.

ExperimentConfig desk_config(std::uint64_t seed) {
    ExperimentConfig c;
    c.seed = seed;
    c.methods = "linkthief,lsa4";
    c.csbm_p = 0.1;
    c.csbm_mu = 0.005;
    c.csbm_d = 4;
    c.hop_radius = 2;
    c.gcn_hidden = 2;
    c.gcn_epochs = 12;
    c.gcn_lr = 0.005;
    c.gcn_weight_decay = 0.02;
    c.gcn_train_fraction = 0.3;
    c.bridge_epochs = 20;
    c.extractor_epochs = 20;
    c.extractor_train_cap = 384;
    c.attack_epochs = 40;
    return c;
}

const fs::path kScratch = "acceptance-scratch";

double method_auc(const PipelineResult& pr, const std::string& method) {
    for (const auto& r : pr.rows)
        if (r.method == method) return r.auc;
    throw std::runtime_error("run produced no metrics row for method " + method);
}

/// Run one pipeline configuration in the scratch area and delete the run
/// directory right away; at desk scale each run writes >100 MB of features.
PipelineResult scratch_run(const ExperimentConfig& cfg, const std::string& name, double* secs) {
    const fs::path dir = kScratch / name;
    const auto t0 = Clock::now();
    PipelineResult pr = run_pipeline(cfg, dir.string());
    if (secs) *secs = seconds_since(t0);
    std::error_code ec;
    fs::remove_all(dir, ec);
    return pr;
}

struct DeskOutcomes {
    Outcome c4, c5, c6, c7;
};

DeskOutcomes criteria4to7(bool need5, bool need6, bool need7) {
    constexpr double kGapMin = 0.05;   // combined attacker must clear lsa4 by this
    constexpr double kAucFloor = 0.7;  // and stay above this outright
    constexpr double kSeedTimeCap = 600.0;
    const std::array<std::uint64_t, 5> seeds{17, 18, 19, 20, 21};
    const std::array<int, 4> budgets{1, 5, 10, 20};

    struct SeedStats {
        double lt = 0.0, lsa4 = 0.0, rand_lt = 0.0;
        double no_bgg = 0.0, no_espm = 0.0, no_esfe = 0.0;
        std::map<int, double> by_budget;
        double full_secs = 0.0;
    };
    std::map<std::uint64_t, SeedStats> stats;

    std::error_code ec;
    fs::remove_all(kScratch, ec);

    for (auto seed : seeds) {
        SeedStats& s = stats[seed];
        const std::string tag = "s" + std::to_string(seed);
        {
            PipelineResult pr = scratch_run(desk_config(seed), "full-" + tag, &s.full_secs);
            s.lt = method_auc(pr, "linkthief");
            s.lsa4 = method_auc(pr, "lsa4");
            s.by_budget[10] = s.lt;
            note("seed %llu full: linkthief %.4f lsa4 %.4f (%.0f s)",
                 static_cast<unsigned long long>(seed), s.lt, s.lsa4, s.full_secs);
        }
        if (need5) {
            for (int b : budgets) {
                if (b == 10) continue;
                ExperimentConfig c = desk_config(seed);
                c.methods = "linkthief";
                c.bridges_per_node = b;
                s.by_budget[b] = method_auc(
                    scratch_run(c, "S" + std::to_string(b) + "-" + tag, nullptr), "linkthief");
                note("seed %llu S=%d: linkthief %.4f", static_cast<unsigned long long>(seed), b,
                     s.by_budget[b]);
            }
        }
        if (need6) {
            ExperimentConfig c = desk_config(seed);
            c.methods = "linkthief";
            c.random_bridges = true;
            s.rand_lt = method_auc(scratch_run(c, "rand-" + tag, nullptr), "linkthief");
            note("seed %llu uniform bridges: linkthief %.4f",
                 static_cast<unsigned long long>(seed), s.rand_lt);
        }
        if (need7) {
            const std::array<std::pair<const char*, double*>, 3> variants{
                std::pair{"no-bgg", &s.no_bgg}, std::pair{"no-espm", &s.no_espm},
                std::pair{"no-esfe", &s.no_esfe}};
            for (auto [variant, slot] : variants) {
                const fs::path dir = kScratch / (std::string(variant) + "-" + tag);
                *slot = run_ablation(desk_config(seed), variant, dir.string()).auc;
                fs::remove_all(dir, ec);
                note("seed %llu %s: %.4f", static_cast<unsigned long long>(seed), variant, *slot);
            }
        }
    }
    fs::remove_all(kScratch, ec);

    DeskOutcomes out;
    {
        int hits = 0;
        double worst_secs = 0.0;
        std::string per_seed;
        for (auto seed : seeds) {
            const SeedStats& s = stats[seed];
            if (s.lt - s.lsa4 >= kGapMin && s.lt > kAucFloor) ++hits;
            worst_secs = std::max(worst_secs, s.full_secs);
            per_seed += strf(" %llu:%.3f/%.3f", static_cast<unsigned long long>(seed), s.lt, s.lsa4);
        }
        out.c4.pass = hits >= 4 && worst_secs < kSeedTimeCap;
        out.c4.detail =
            strf("linkthief/lsa4 auc:%s; gap>=%.2f & auc>%.1f on %d/5 seeds (need 4), slowest run "
                 "%.0f s (cap %.0f)",
                 per_seed.c_str(), kGapMin, kAucFloor, hits, worst_secs, kSeedTimeCap);
    }
    if (need5) {
        std::array<double, 4> mean{};
        for (std::size_t i = 0; i < budgets.size(); ++i) {
            for (auto seed : seeds) mean[i] += stats[seed].by_budget[budgets[i]];
            mean[i] /= static_cast<double>(seeds.size());
        }
        int up_steps = 0;
        for (std::size_t i = 0; i + 1 < mean.size(); ++i)
            if (mean[i + 1] >= mean[i]) ++up_steps;
        const bool end_to_end = mean.back() >= mean.front();
        out.c5.pass = up_steps >= 2 && end_to_end;
        out.c5.detail = strf("mean auc over 5 seeds at S=1,5,10,20: %.4f %.4f %.4f %.4f; "
                             "%d/3 steps non-decreasing (need 2), S=1 to S=20 change %+.4f (need >= 0)",
                             mean[0], mean[1], mean[2], mean[3], up_steps, mean.back() - mean.front());
    }
    if (need6) {
        int wins = 0;
        std::string deltas;
        for (auto seed : seeds) {
            const SeedStats& s = stats[seed];
            if (s.lt >= s.rand_lt) ++wins;
            deltas += strf(" %llu:%+.4f", static_cast<unsigned long long>(seed), s.lt - s.rand_lt);
        }
        out.c6.pass = wins >= 3;
        out.c6.detail = strf("trained minus uniform placement auc:%s; trained >= uniform on %d/5 "
                             "seeds (need 3)",
                             deltas.c_str(), wins);
    }
    if (need7) {
        int w_bgg = 0, w_espm = 0, w_esfe = 0;
        for (auto seed : seeds) {
            const SeedStats& s = stats[seed];
            w_bgg += s.lt >= s.no_bgg;
            w_espm += s.lt >= s.no_espm;
            w_esfe += s.lt >= s.no_esfe;
        }
        out.c7.pass = w_bgg >= 3 && w_espm >= 3 && w_esfe >= 3;
        out.c7.detail = strf("full >= variant (of 5 seeds, need 3 each): no-bgg %d, no-espm %d, "
                             "no-esfe %d",
                             w_bgg, w_espm, w_esfe);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 8: numeric kernels against independent oracles.

EdgeList random_graph_edges(int n, double edge_prob, Rng& rng) {
    EdgeList edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < edge_prob) edges.emplace_back(i, j);
    return edges;
}

Outcome criterion8() {
    constexpr int kSubgraphs = 500;
    constexpr int kTransportCases = 100;
    constexpr double kTransportRelTol = 0.05;
    constexpr int kAucCases = 50;
    constexpr double kAucAbsTol = 1e-9;
    constexpr double kGradRelTol = 1e-4;

    Rng rng(derive_seed(101, "acceptance-oracles"));

    // (a) distance-role labels vs a clean-room double BFS over the extracted
    // subgraph with the focal pair's own edge absent.
    int label_mismatches = 0, labels_checked = 0;
    for (int t = 0; t < kSubgraphs; ++t) {
        const int n = 6 + rng.uniform_int(35);
        EdgeList edges = random_graph_edges(n, 0.05 + 0.25 * rng.uniform(), rng);
        BridgeGraph bg = target_only_bridge_graph(n, edges, Eigen::MatrixXd::Zero(n, 2));
        const int u = rng.uniform_int(n);
        int v = rng.uniform_int(n);
        while (v == u) v = rng.uniform_int(n);
        const int r = 1 + rng.uniform_int(3);
        EdgeSubgraph sub = extract_edge_subgraph(bg, {u, v}, r, LinkMode::target_link, n,
                                                 derive_seed(101, "sub-" + std::to_string(t)));

        std::vector<std::vector<int>> adj(sub.size());
        for (auto [a, b] : sub.edges) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        auto bfs = [&](int s0) {
            std::vector<long long> d(static_cast<std::size_t>(sub.size()), -1);
            std::vector<int> q{s0};
            d[static_cast<std::size_t>(s0)] = 0;
            for (std::size_t h = 0; h < q.size(); ++h)
                for (int w : adj[static_cast<std::size_t>(q[h])])
                    if (d[static_cast<std::size_t>(w)] < 0) {
                        d[static_cast<std::size_t>(w)] = d[static_cast<std::size_t>(q[h])] + 1;
                        q.push_back(w);
                    }
            return d;
        };
        const auto di = bfs(0), dj = bfs(1);
        for (int i = 0; i < sub.size(); ++i) {
            long long expect;
            if (i < 2) {
                expect = 1;
            } else if (di[i] < 0 || dj[i] < 0) {
                expect = 0;
            } else {
                const long long dsum = di[i] + dj[i], half = dsum / 2;
                expect = 1 + std::min(di[i], dj[i]) + half * (half + dsum % 2 - 1);
            }
            label_mismatches += sub.drnl[i] != expect;
            ++labels_checked;
        }
    }

    // (b) entropic transport vs brute-force assignment: with equal counts and
    // uniform weights the exact optimum is a permutation. Near cost ties the
    // marginals tighten far more slowly than the value, so feasibility is
    // checked directly on the returned plan rather than via the solver flag.
    constexpr double kMarginalTol = 1e-4;
    double ot_max_rel = 0.0, ot_max_viol = 0.0;
    for (int t = 0; t < kTransportCases; ++t) {
        const int n = 2 + rng.uniform_int(7);
        const int dim = 1 + rng.uniform_int(4);
        Eigen::MatrixXd xs(n, dim), ys(n, dim);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < dim; ++j) {
                xs(i, j) = rng.normal();
                ys(i, j) = rng.normal();
            }
        const SinkhornPlan res = sinkhorn_plan(xs, ys, 1e-3, 20000);
        const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
        const double viol = std::max(
            (res.plan.rowwise().sum() - uniform).cwiseAbs().maxCoeff(),
            (res.plan.colwise().sum().transpose() - uniform).cwiseAbs().maxCoeff());
        ot_max_viol = std::max(ot_max_viol, viol);
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (int i = 0; i < n; ++i) cost += (xs.row(i) - ys.row(perm[i])).norm();
            best = std::min(best, cost / n);
        } while (std::next_permutation(perm.begin(), perm.end()));
        ot_max_rel = std::max(ot_max_rel, std::abs(res.info.value - best) / std::max(best, 1e-9));
    }

    // (c) rank-statistic AUC vs the brute-force pairwise count, ties at half.
    double auc_max_err = 0.0;
    for (int t = 0; t < kAucCases; ++t) {
        const int n = 5 + rng.uniform_int(196);
        Eigen::VectorXd s(n), y(n);
        const bool coarse = t % 2 == 0;  // coarse grids force score ties
        for (int i = 0; i < n; ++i) {
            const double raw = rng.uniform();
            s(i) = coarse ? std::round(raw * 12.0) / 12.0 : raw;
            y(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
        y(0) = 0.0;
        y(1) = 1.0;
        double pairs = 0.0;
        long npos = 0, nneg = 0;
        for (int i = 0; i < n; ++i) {
            if (y(i) < 0.5) continue;
            ++npos;
            for (int j = 0; j < n; ++j) {
                if (y(j) > 0.5) continue;
                if (s(i) > s(j)) pairs += 1.0;
                else if (s(i) == s(j)) pairs += 0.5;
            }
        }
        nneg = n - npos;
        const double brute = pairs / (static_cast<double>(npos) * static_cast<double>(nneg));
        auc_max_err = std::max(auc_max_err, std::abs(auc_score(s, y) - brute));
    }

    // (d) analytic gradients vs central finite differences: the policy-score
    // gradient of the sampled-bridge log probability, and every input
    // gradient of the mutual-information bound.
    auto rel_err = [](double a, double b) {
        if (std::max(std::abs(a), std::abs(b)) < 1e-6) return std::abs(a - b) > 1e-8 ? 1.0 : 0.0;
        return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
    };

    double pg_max_rel = 0.0;
    {
        BridgeConfig bc;
        bc.samples_per_node = 2;
        bc.encoder_hidden = 4;
        BridgeState st = init_bridge(3, 5, 4, bc, derive_seed(101, "fd-bridge"));
        for (int i = 0; i < st.scores.rows(); ++i)
            for (int j = 0; j < st.scores.cols(); ++j) st.scores(i, j) = 0.5 * rng.normal();
        const EdgeList bridges = sample_bridges(st, derive_seed(101, "fd-sample"));
        const Eigen::MatrixXd grad =
            bridge_log_prob_grad(st.scores, bridges, bc.samples_per_node);
        const double h = 1e-5;
        for (int i = 0; i < st.scores.rows(); ++i)
            for (int j = 0; j < st.scores.cols(); ++j) {
                Eigen::MatrixXd hi = st.scores, lo = st.scores;
                hi(i, j) += h;
                lo(i, j) -= h;
                const double fd = (bridge_log_prob(hi, bridges) - bridge_log_prob(lo, bridges)) /
                                  (2.0 * h);
                pg_max_rel = std::max(pg_max_rel, rel_err(grad(i, j), fd));
            }
    }

    double mi_max_rel = 0.0;
    {
        const int rows = 4, width = 3, pooled = 5;
        Eigen::MatrixXd z(rows, width), zn(rows, width), psi(width, pooled);
        Eigen::VectorXd s(pooled);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < width; ++j) {
                z(i, j) = 0.5 * rng.normal();
                zn(i, j) = 0.5 * rng.normal();
            }
        for (int i = 0; i < width; ++i)
            for (int j = 0; j < pooled; ++j) psi(i, j) = 0.5 * rng.normal();
        for (int i = 0; i < pooled; ++i) s(i) = 0.5 * rng.normal();

        const MiGrads g = mi_backward(psi, z, s, zn);
        const double h = 1e-6;
        auto fd_against = [&](double& slot, double analytic) {
            const double keep = slot;
            slot = keep + h;
            const double hi = mi_estimate(psi, z, s, zn);
            slot = keep - h;
            const double lo = mi_estimate(psi, z, s, zn);
            slot = keep;
            mi_max_rel = std::max(mi_max_rel, rel_err(analytic, (hi - lo) / (2.0 * h)));
        };
        for (int i = 0; i < width; ++i)
            for (int j = 0; j < pooled; ++j) fd_against(psi(i, j), g.dpsi(i, j));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < width; ++j) {
                fd_against(z(i, j), g.dz(i, j));
                fd_against(zn(i, j), g.dz_neg(i, j));
            }
        for (int i = 0; i < pooled; ++i) fd_against(s(i), g.ds(i));
    }

    Outcome out;
    out.pass = label_mismatches == 0 && ot_max_rel <= kTransportRelTol &&
               ot_max_viol <= kMarginalTol && auc_max_err <= kAucAbsTol &&
               pg_max_rel < kGradRelTol && mi_max_rel < kGradRelTol;
    out.detail = strf("distance labels: %d/%d exact; transport vs %d brute-force optima: max rel "
                      "%.5f (tol %.2f), worst marginal gap %.1e (tol %g); auc vs pairwise: max "
                      "err %.2g (tol %g); gradient checks: policy %.2g, mi %.2g (tol %g)",
                      labels_checked - label_mismatches, labels_checked, kTransportCases,
                      ot_max_rel, kTransportRelTol, ot_max_viol, kMarginalTol, auc_max_err,
                      kAucAbsTol, pg_max_rel, mi_max_rel, kGradRelTol);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: interface hygiene. Posterior queries return probability rows,
// bridge samples are bipartite with an exact per-node budget, pair splits
// never overlap, and the attack side runs from posterior tables alone.

Eigen::MatrixXd random_posterior_table(int rows, int classes, Rng& rng) {
    Eigen::MatrixXd p(rows, classes);
    for (int i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < classes; ++j) {
            p(i, j) = 0.05 + rng.uniform();
            sum += p(i, j);
        }
        p.row(i) /= sum;
    }
    return p;
}

Outcome criterion9() {
    constexpr double kRowSumTol = 1e-9;
    Rng rng(derive_seed(131, "acceptance-hygiene"));

    // (a) every posterior query returns nonnegative rows summing to one,
    // including queries against a graph the model never trained on.
    double worst_row_gap = 0.0, min_entry = 1.0;
    int posterior_rows = 0;
    for (int t = 0; t < 3; ++t) {
        CsbmParams cp;
        cp.n = 60;
        cp.p = 0.15;
        cp.q = 0.05;
        cp.mu = 1.0;
        cp.k = 1.0;
        cp.d = 4;
        const std::string tag = std::to_string(t);
        Graph g = generate_csbm(cp, derive_seed(131, "own-" + tag));
        Graph h = generate_csbm(cp, derive_seed(131, "foreign-" + tag));
        GcnConfig gc;
        gc.hidden = 8;
        gc.epochs = 30;
        gc.train_fraction = 0.6;
        GcnModel m = train_gcn(g, gc, derive_seed(131, "victim-" + tag));
        for (const Graph* q : {&g, &h}) {
            const Eigen::MatrixXd p = query_posteriors(m, *q);
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                worst_row_gap = std::max(worst_row_gap, std::abs(p.row(i).sum() - 1.0));
                min_entry = std::min(min_entry, p.row(i).minCoeff());
            }
            posterior_rows += static_cast<int>(p.rows());
        }
    }
    const bool posteriors_ok = worst_row_gap <= kRowSumTol && min_entry >= 0.0;

    // (b) every bridge sample is bipartite with exactly samples_per_node
    // distinct endpoints per shadow node, from both untrained and trained
    // policies.
    const int ns = 12, nt = 9, per_node = 3;
    EdgeList shadow_edges = random_graph_edges(ns, 0.3, rng);
    EdgeList target_edges = random_graph_edges(nt, 0.3, rng);
    Eigen::MatrixXd shadow_feats = random_posterior_table(ns, 2, rng);
    Eigen::MatrixXd target_feats = random_posterior_table(nt, 2, rng);
    BridgeConfig bc;
    bc.samples_per_node = per_node;
    bc.epochs = 5;
    bc.encoder_hidden = 4;

    int bridge_faults = 0, bridge_samples = 0;
    auto check_sample = [&](const EdgeList& bridges, const BridgeGraph& bg) {
        ++bridge_samples;
        if (bridges.size() != static_cast<std::size_t>(ns) * per_node) ++bridge_faults;
        std::map<int, std::set<int>> per_row;
        for (auto [i, j] : bridges) {
            if (i < 0 || i >= ns || j < 0 || j >= nt) ++bridge_faults;
            if (!per_row[i].insert(j).second) ++bridge_faults;  // duplicate endpoint
        }
        for (const auto& [i, picks] : per_row)
            if (picks.size() != static_cast<std::size_t>(per_node)) ++bridge_faults;
        if (bg.bridge_edges.size() != bridges.size()) ++bridge_faults;
        for (auto [u, v] : bg.bridge_edges)
            if (!(u < ns && v >= ns && v < ns + nt)) ++bridge_faults;
    };
    BridgeState st = init_bridge(ns, nt, 2, bc, derive_seed(131, "bridge-init"));
    for (int t = 0; t < 10; ++t) {
        EdgeList b = sample_bridges(st, derive_seed(131, "draw-" + std::to_string(t)));
        check_sample(b, make_bridge_graph(ns, shadow_edges, nt, target_edges, shadow_feats,
                                          target_feats, b));
    }
    BridgeTrainResult tr = train_bridge(bc, ns, shadow_edges, shadow_feats, nt, target_edges,
                                        target_feats, derive_seed(131, "bridge-train"));
    check_sample(tr.bridges, tr.graph);
    const bool bridges_ok = bridge_faults == 0;

    // (c) train/val/test pair sets are disjoint, test positives are exactly
    // the withheld links, and training positives never touch withheld links.
    int split_faults = 0;
    for (int t = 0; t < 5; ++t) {
        Graph g;
        g.num_nodes = 40;
        g.edges = random_graph_edges(40, 0.12, rng);
        Graph sh;
        sh.num_nodes = 35;
        sh.edges = random_graph_edges(35, 0.12, rng);
        const LeakSplit split = split_leak(g, 0.4, derive_seed(131, "leak-" + std::to_string(t)));
        if (split.leaked.empty() || split.safe.empty()) continue;
        const AttackDatasets ds =
            build_attack_datasets(split, 40, &sh, derive_seed(131, "ds-" + std::to_string(t)));

        using Key = std::tuple<int, int, int>;
        auto key = [](const AttackSample& s) {
            return Key{static_cast<int>(s.origin), std::min(s.u, s.v), std::max(s.u, s.v)};
        };
        std::set<Key> train_keys, val_keys, test_keys;
        for (const auto& s : ds.train) train_keys.insert(key(s));
        for (const auto& s : ds.val) val_keys.insert(key(s));
        for (const auto& s : ds.test) test_keys.insert(key(s));
        for (const auto& k : train_keys) split_faults += val_keys.count(k) + test_keys.count(k);
        for (const auto& k : val_keys) split_faults += test_keys.count(k);

        const std::set<Edge> leaked(split.leaked.begin(), split.leaked.end());
        const std::set<Edge> safe(split.safe.begin(), split.safe.end());
        const std::set<Edge> shadow(sh.edges.begin(), sh.edges.end());
        std::set<Edge> test_pos;
        for (const auto& s : ds.test) {
            const Edge e{std::min(s.u, s.v), std::max(s.u, s.v)};
            if (s.origin != PairOrigin::target_test) ++split_faults;
            if (s.label == 1) test_pos.insert(e);
            else split_faults += leaked.count(e) + safe.count(e);  // negatives off every link
        }
        if (test_pos != safe) ++split_faults;
        for (const auto* part : {&ds.train, &ds.val})
            for (const auto& s : *part) {
                const Edge e{std::min(s.u, s.v), std::max(s.u, s.v)};
                if (s.origin == PairOrigin::target_test) ++split_faults;
                if (s.label == 1)
                    split_faults += s.origin == PairOrigin::shadow ? !shadow.count(e)
                                                                   : !leaked.count(e);
                else
                    split_faults += s.origin == PairOrigin::shadow
                                        ? static_cast<int>(shadow.count(e))
                                        : static_cast<int>(leaked.count(e) + safe.count(e));
            }
    }
    const bool splits_ok = split_faults == 0;

    // (d) access contracts through stand-ins. Black box: the whole attack
    // stage runs from posterior tables and pair lists alone, no model or
    // graph beyond the adversary's own. Leaked-only: with no shadow graph the
    // featurizer never reads the shadow table, so swapping an empty table for
    // a populated one changes nothing.
    bool blackbox_ok = false, leaked_only_ok = true;
    {
        Graph g;
        g.num_nodes = 40;
        g.edges = random_graph_edges(40, 0.15, rng);
        Graph sh;
        sh.num_nodes = 35;
        sh.edges = random_graph_edges(35, 0.15, rng);
        const LeakSplit split = split_leak(g, 0.4, derive_seed(131, "bb-leak"));
        const Eigen::MatrixXd target_table = random_posterior_table(40, 3, rng);
        const Eigen::MatrixXd shadow_table = random_posterior_table(35, 3, rng);

        AttackDatasets ds = build_attack_datasets(split, 40, &sh, derive_seed(131, "bb-ds"));
        for (auto* part : {&ds.train, &ds.val, &ds.test})
            featurize_attack_samples(*part, shadow_table, target_table,
                                     default_similarity_metrics());
        MlpConfig mc;
        mc.hidden = {8};
        mc.epochs = 10;
        mc.lr = 0.01;
        const AttackTrainResult fit =
            train_attack_model(ds.train, ds.val, mc, derive_seed(131, "bb-fit"));
        const AttackMetrics metrics = evaluate_attack(fit.model, ds.test);
        blackbox_ok = std::isfinite(metrics.auc) && metrics.tp + metrics.fp + metrics.tn +
                                                            metrics.fn ==
                                                        static_cast<long>(ds.test.size());

        AttackDatasets lo = build_attack_datasets(split, 40, nullptr, derive_seed(131, "lo-ds"));
        AttackDatasets lo_alt = lo;
        const Eigen::MatrixXd empty_table(0, 0);
        for (auto* part : {&lo.train, &lo.val, &lo.test})
            featurize_attack_samples(*part, empty_table, target_table,
                                     default_similarity_metrics());
        for (auto* part : {&lo_alt.train, &lo_alt.val, &lo_alt.test})
            featurize_attack_samples(*part, shadow_table, target_table,
                                     default_similarity_metrics());
        auto same = [](const std::vector<AttackSample>& a, const std::vector<AttackSample>& b) {
            if (a.size() != b.size()) return false;
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i].origin == PairOrigin::shadow) return false;
                if (a[i].similarity.size() != b[i].similarity.size()) return false;
                if ((a[i].similarity.array() != b[i].similarity.array()).any()) return false;
            }
            return true;
        };
        leaked_only_ok = same(lo.train, lo_alt.train) && same(lo.val, lo_alt.val) &&
                         same(lo.test, lo_alt.test);
    }

    Outcome out;
    out.pass = posteriors_ok && bridges_ok && splits_ok && blackbox_ok && leaked_only_ok;
    out.detail = strf("posteriors: %d rows, worst sum gap %.1e, min entry %.1e; bridges: %d "
                      "samples, %d faults; splits: %d faults; table-only attack: %s; shadow table "
                      "untouched without shadow graph: %s",
                      posterior_rows, worst_row_gap, min_entry, bridge_samples, bridge_faults,
                      split_faults, blackbox_ok ? "ok" : "broken",
                      leaked_only_ok ? "ok" : "broken");
    return out;
}

template <class F>
Outcome guarded(F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("unhandled error: ") + e.what()};
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (id < 1 || id > 9) {
            std::fprintf(stderr, "usage: %s [criterion numbers 1-9]\n", argv[0]);
            return 2;
        }
        pick.insert(id);
    }
    auto want = [&](int id) { return pick.empty() || pick.count(id) > 0; };

    const std::array<const char*, 9> names{
        "privacy-theft closed form matches the direct difference at k = 1",
        "privacy-theft gap contracts toward k = 1 and vanishes at k = 1, D = 1",
        "privacy-theft gap decays to zero as D approaches 1, Monte-Carlo agrees",
        "combined attacker beats the similarity-only attacker on twin synthetic graphs",
        "attack quality is non-decreasing in the bridge budget",
        "trained bridge placement is no worse than uniform placement",
        "full attacker dominates each module-dropping variant",
        "numeric oracles: distance labels, exact transport, rank auc, gradients",
        "hygiene: stochastic posteriors, bipartite bridges, disjoint splits, access",
    };

    const auto t0 = Clock::now();
    std::map<int, Outcome> results;
    if (want(1)) results[1] = guarded(criterion1);
    if (want(2)) results[2] = guarded(criterion2);
    if (want(3)) results[3] = guarded(criterion3);
    if (want(8)) results[8] = guarded(criterion8);
    if (want(9)) results[9] = guarded(criterion9);
    if (want(4) || want(5) || want(6) || want(7)) {
        const bool need5 = want(5), need6 = want(6), need7 = want(7);
        DeskOutcomes desk{};
        try {
            desk = criteria4to7(need5, need6, need7);
        } catch (const std::exception& e) {
            const Outcome failed{false, std::string("unhandled error: ") + e.what()};
            desk = {failed, failed, failed, failed};
        }
        if (want(4)) results[4] = desk.c4;
        if (need5) results[5] = desk.c5;
        if (need6) results[6] = desk.c6;
        if (need7) results[7] = desk.c7;
    }

    int passed = 0;
    for (const auto& [id, r] : results) {
        std::printf("%s criterion %d: %s [%s]\n", r.pass ? "PASS" : "FAIL", id, names[id - 1],
                    r.detail.c_str());
        passed += r.pass;
    }
    std::printf("acceptance: %d of %zu criteria passed (%.0f s)\n", passed, results.size(),
                seconds_since(t0));
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}
