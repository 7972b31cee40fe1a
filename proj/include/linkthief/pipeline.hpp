#ifndef LINKTHIEF_PIPELINE_HPP
#define LINKTHIEF_PIPELINE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "linkthief/attack.hpp"
#include "linkthief/bridge.hpp"
#include "linkthief/config.hpp"
#include "linkthief/extractor.hpp"
#include "linkthief/graph.hpp"
#include "linkthief/subgraph.hpp"
#include "linkthief/victim.hpp"

namespace linkthief {

/// End-to-end experiment orchestration: data, victim models, bridge graph,
/// enclosing subgraphs, structure features, attackers, metrics. Every stage
/// seeds its randomness from (config seed, stage tag), so a config snapshot
/// reproduces a run bit for bit.

struct MetricsRow {
    std::string target, shadow, method;
    double leak_rate = 0.0;
    int bridges = 0;
    std::uint64_t seed = 0;
    double auc = 0.0, asr = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

inline void save_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "target,shadow,method,leak_rate,bridges,seed,auc,asr,tp,fp,tn,fn\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%d,%llu,%.17g,%.17g,%ld,%ld,%ld,%ld\n",
                      r.leak_rate, r.bridges, static_cast<unsigned long long>(r.seed), r.auc,
                      r.asr, r.tp, r.fp, r.tn, r.fn);
        f << r.target << ',' << r.shadow << ',' << r.method << buf;
    }
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

inline std::vector<MetricsRow> load_metrics_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty metrics file: " + path);
    std::vector<MetricsRow> rows;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<std::string> cells;
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 12)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 12 metric columns, got " +
                                     std::to_string(cells.size()));
        MetricsRow r;
        r.target = cells[0];
        r.shadow = cells[1];
        r.method = cells[2];
        r.leak_rate = std::stod(cells[3]);
        r.bridges = std::stoi(cells[4]);
        r.seed = std::stoull(cells[5]);
        r.auc = std::stod(cells[6]);
        r.asr = std::stod(cells[7]);
        r.tp = std::stol(cells[8]);
        r.fp = std::stol(cells[9]);
        r.tn = std::stol(cells[10]);
        r.fn = std::stol(cells[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-22s %-12s %-12s %6s %4s %8s %8s %6s %6s %6s %6s\n",
                  "method", "target", "shadow", "leak", "S", "auc", "asr", "tp", "fp", "tn", "fn");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%-22s %-12s %-12s %6.2f %4d %8.4f %8.4f %6ld %6ld %6ld %6ld\n",
                      r.method.c_str(), r.target.c_str(), r.shadow.c_str(), r.leak_rate, r.bridges,
                      r.auc, r.asr, r.tp, r.fp, r.tn, r.fn);
        out += buf;
    }
    return out;
}

struct PipelineResult {
    std::string run_dir;
    std::vector<MetricsRow> rows;
    GcnTrainInfo victim_info, shadow_info;
    std::vector<double> bridge_inner_trace, bridge_outer_trace, extractor_trace;
};

/// Stages in execution order; a run can stop after any of them, leaving the
/// artifacts produced so far in the run directory.
enum class PipelineStage { data, victim, bridge, subgraphs, attack };

inline const char* to_string(PipelineStage s) {
    switch (s) {
        case PipelineStage::data: return "data";
        case PipelineStage::victim: return "victim";
        case PipelineStage::bridge: return "bridge";
        case PipelineStage::subgraphs: return "subgraphs";
        default: return "attack";
    }
}

namespace pipeline_detail {

using SubKey = std::tuple<int, int, int>;  // (origin, u, v) in origin-local ids

inline SubKey key_of(const AttackSample& s) {
    return {static_cast<int>(s.origin), s.u, s.v};
}

inline Edge global_pair(const AttackSample& s, int num_shadow) {
    if (s.origin == PairOrigin::shadow) return {s.u, s.v};
    return {s.u + num_shadow, s.v + num_shadow};
}

inline LinkMode mode_of(const AttackSample& s) {
    return s.origin == PairOrigin::shadow ? LinkMode::shadow_link : LinkMode::target_link;
}

/// Ablation stand-in for neighborhood sampling: a uniformly random node set
/// from the allowed side (plus the focal pair), induced edges, no distance
/// labels.
inline EdgeSubgraph uniform_edge_subgraph(const BridgeGraph& bg, const TraversalIndex& tidx,
                                          Edge pair, LinkMode mode, int r, int max_nodes,
                                          std::uint64_t seed) {
    const auto& adj = mode == LinkMode::target_link ? tidx.target_only : tidx.all;
    std::vector<int> pool;
    for (int v = 0; v < bg.total(); ++v) {
        if (v == pair.first || v == pair.second) continue;
        if (mode == LinkMode::target_link && !bg.is_target(v)) continue;
        pool.push_back(v);
    }
    Rng rng(derive_seed(seed, "uniform-subgraph"));
    rng.shuffle(pool);
    EdgeSubgraph sub;
    sub.focal = pair;
    sub.mode = mode;
    sub.radius = r;
    sub.nodes = {pair.first, pair.second};
    const int extra = std::min<int>(max_nodes - 2, static_cast<int>(pool.size()));
    std::vector<int> chosen(pool.begin(), pool.begin() + extra);
    std::sort(chosen.begin(), chosen.end());
    sub.nodes.insert(sub.nodes.end(), chosen.begin(), chosen.end());

    std::vector<int> local(bg.total(), -1);
    for (int i = 0; i < sub.size(); ++i) local[sub.nodes[i]] = i;
    for (int i = 0; i < sub.size(); ++i) {
        for (int v : adj[sub.nodes[i]]) {
            const int lv = local[v];
            if (lv < 0 || lv <= i) continue;
            if ((sub.nodes[i] == pair.first && v == pair.second) ||
                (sub.nodes[i] == pair.second && v == pair.first))
                continue;
            sub.edges.emplace_back(i, lv);
        }
    }
    std::sort(sub.edges.begin(), sub.edges.end());
    sub.drnl.assign(sub.size(), 0);
    return sub;
}

inline void write_trace_csv(const std::string& path, const std::vector<std::string>& names,
                            const std::vector<const std::vector<double>*>& cols) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "epoch";
    for (const auto& n : names) f << ',' << n;
    f << '\n';
    std::size_t rows = 0;
    for (auto* c : cols) rows = std::max(rows, c->size());
    char buf[64];
    for (std::size_t i = 0; i < rows; ++i) {
        f << i;
        for (auto* c : cols) {
            if (i < c->size()) {
                std::snprintf(buf, sizeof(buf), ",%.17g", (*c)[i]);
                f << buf;
            } else {
                f << ',';
            }
        }
        f << '\n';
    }
}

inline void write_posterior_csv(const Eigen::MatrixXd& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "node_id";
    for (Eigen::Index j = 0; j < m.cols(); ++j) f << ",p" << j;
    f << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        f << i;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), ",%.17g", m(i, j));
            f << buf;
        }
        f << '\n';
    }
}

} // namespace pipeline_detail

/// Run every configured method in one directory. Artifacts: config snapshot,
/// graph/edge dumps, model checkpoints, loss traces, per-pair structure
/// features, metrics.csv (plus a readable metrics.txt) and diagnostic scatter
/// projections. On any stage failure a FAILED marker with the error message
/// is left next to whatever partial artifacts exist, and the error rethrown.
/// `until` stops the run early after the named stage.
inline PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& run_dir,
                                   PipelineStage until = PipelineStage::attack) {
    namespace fs = std::filesystem;
    fs::create_directories(run_dir);
    std::error_code ec;
    fs::remove(fs::path(run_dir) / "FAILED", ec);
    const auto t0 = std::chrono::steady_clock::now();
    std::ofstream log(fs::path(run_dir) / "run.log");
    auto note = [&](const std::string& msg) {
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char buf[32];
        std::snprintf(buf, sizeof(buf), "[%8.2fs] ", dt);
        log << buf << msg << '\n';
        log.flush();
    };

    try {
        validate_config(cfg);
        for (const std::string& p :
             {cfg.target_edges, cfg.target_features, cfg.target_labels, cfg.shadow_edges,
              cfg.shadow_features, cfg.shadow_labels})
            if (!p.empty() && !fs::exists(p))
                throw std::runtime_error("configured dataset file does not exist: " + p);
        save_config(cfg, (fs::path(run_dir) / "config.txt").string());

        PipelineResult res;
        res.run_dir = run_dir;
        const auto methods = parse_name_list(cfg.methods);
        const bool needs_shadow =
            std::any_of(methods.begin(), methods.end(),
                        [](const std::string& m) { return m != "lsa3"; });

        // Data.
        Graph target = cfg.target_edges.empty()
                           ? generate_csbm(csbm_params_from(cfg), derive_seed(cfg.seed, "target-graph"))
                           : load_dataset(cfg.target_edges, cfg.target_features, cfg.target_labels,
                                          derive_seed(cfg.seed, "target-graph"));
        Graph shadow = cfg.shadow_edges.empty()
                           ? generate_csbm(csbm_params_from(cfg), derive_seed(cfg.seed, "shadow-graph"))
                           : load_dataset(cfg.shadow_edges, cfg.shadow_features, cfg.shadow_labels,
                                          derive_seed(cfg.seed, "shadow-graph"));
        save_edge_list(target, (fs::path(run_dir) / "target.edges").string());
        save_edge_list(shadow, (fs::path(run_dir) / "shadow.edges").string());
        note("data ready: target " + std::to_string(target.num_nodes) + " nodes / " +
             std::to_string(target.edges.size()) + " edges, shadow " +
             std::to_string(shadow.num_nodes) + " nodes / " + std::to_string(shadow.edges.size()) +
             " edges");

        LeakSplit split = split_leak(target, cfg.leak_rate, derive_seed(cfg.seed, "leak"));
        {
            Graph tmp = target;
            tmp.edges = split.leaked;
            save_edge_list(tmp, (fs::path(run_dir) / "leaked.edges").string());
            tmp.edges = split.safe;
            save_edge_list(tmp, (fs::path(run_dir) / "safe.edges").string());
        }
        note("leak split: " + std::to_string(split.leaked.size()) + " leaked / " +
             std::to_string(split.safe.size()) + " withheld");
        if (until == PipelineStage::data) {
            note("stopped after data stage");
            return res;
        }

        // Victim models; downstream stages only ever see their posteriors.
        const GcnConfig gcn_cfg = gcn_config_from(cfg);
        GcnModel victim = train_gcn(target, gcn_cfg, derive_seed(cfg.seed, "victim-target"),
                                    &res.victim_info);
        Eigen::MatrixXd target_post = query_posteriors(victim, target);
        save_gcn(victim, (fs::path(run_dir) / "victim.ckpt").string());
        pipeline_detail::write_posterior_csv(target_post,
                                             (fs::path(run_dir) / "target-posteriors.csv").string());
        note("victim model: train acc " + std::to_string(res.victim_info.train_accuracy) +
             ", val acc " + std::to_string(res.victim_info.val_accuracy));

        Eigen::MatrixXd shadow_post;
        if (needs_shadow) {
            GcnModel sh = train_gcn(shadow, gcn_cfg, derive_seed(cfg.seed, "victim-shadow"),
                                    &res.shadow_info);
            shadow_post = query_posteriors(sh, shadow);
            save_gcn(sh, (fs::path(run_dir) / "shadow.ckpt").string());
            pipeline_detail::write_posterior_csv(
                shadow_post, (fs::path(run_dir) / "shadow-posteriors.csv").string());
            note("shadow model: train acc " + std::to_string(res.shadow_info.train_accuracy) +
                 ", val acc " + std::to_string(res.shadow_info.val_accuracy));
        }
        if (until == PipelineStage::victim) {
            note("stopped after victim stage");
            return res;
        }

        const auto metric_fns = metrics_from(cfg);
        const MlpConfig mlp_cfg = mlp_config_from(cfg);
        const int num_shadow = shadow.num_nodes;
        const int num_target = target.num_nodes;

        AttackDatasets ds_shared;  // knowledge: shadow graph + leaked links
        bool ds_shared_ready = false;
        auto shared_datasets = [&]() -> const AttackDatasets& {
            if (!ds_shared_ready) {
                ds_shared = build_attack_datasets(split, num_target, &shadow,
                                                  derive_seed(cfg.seed, "datasets-shadow"));
                ds_shared_ready = true;
            }
            return ds_shared;
        };

        // Structure stage (bridge graph, subgraphs, extractor), built once and
        // only when some configured method needs structure features.
        const bool wants_structure =
            std::any_of(methods.begin(), methods.end(),
                        [](const std::string& m) { return m == "linkthief"; }) &&
            cfg.ablation != "no-esfe";
        BridgeGraph bg;
        TraversalIndex traversal, test_traversal;
        ExtractorState extractor;
        std::map<pipeline_detail::SubKey, EdgeSubgraph> subgraphs;
        std::map<pipeline_detail::SubKey, Eigen::VectorXd> structure_cache;
        const bool zero_drnl = cfg.ablation == "no-espm";

        if (wants_structure) {
            const BridgeConfig bcfg = bridge_config_from(cfg);
            if (cfg.ablation == "no-bgg") {
                bg = make_bridge_graph(num_shadow, shadow.edges, num_target, split.leaked,
                                       shadow_post, target_post, {});
                note("bridge stage skipped (ablation no-bgg): disjoint union");
            } else if (cfg.random_bridges) {
                BridgeState st = init_bridge(num_shadow, num_target,
                                             static_cast<int>(shadow_post.cols()), bcfg,
                                             derive_seed(cfg.seed, "bridge"));
                EdgeList bridges = sample_bridges(st, derive_seed(cfg.seed, "bridge-final"));
                bg = make_bridge_graph(num_shadow, shadow.edges, num_target, split.leaked,
                                       shadow_post, target_post, bridges);
                note("bridge stage: " + std::to_string(bridges.size()) +
                     " bridges from the untrained uniform policy");
            } else {
                BridgeTrainResult tr =
                    train_bridge(bcfg, num_shadow, shadow.edges, shadow_post, num_target,
                                 split.leaked, target_post, derive_seed(cfg.seed, "bridge"));
                bg = tr.graph;
                res.bridge_inner_trace = tr.inner_trace;
                res.bridge_outer_trace = tr.outer_trace;
                save_bridge(tr.state, (fs::path(run_dir) / "bridge.ckpt").string());
                pipeline_detail::write_trace_csv(
                    (fs::path(run_dir) / "bridge-trace.csv").string(),
                    {"inner", "outer", "reward"},
                    {&tr.inner_trace, &tr.outer_trace, &tr.reward_trace});
                note("bridge stage: " + std::to_string(tr.bridges.size()) + " bridges, inner " +
                     std::to_string(tr.inner_trace.front()) + " -> " +
                     std::to_string(tr.inner_trace.back()));
            }
            export_bridge_graph(bg, (fs::path(run_dir) / "bridge.edges").string(),
                                (fs::path(run_dir) / "bridge.provenance").string());
            if (until == PipelineStage::bridge) {
                note("stopped after bridge stage");
                return res;
            }

            traversal = build_traversal(bg);
            if (cfg.oracle_test_adjacency) {
                EdgeList known = split.leaked;
                known.insert(known.end(), split.safe.begin(), split.safe.end());
                EdgeList bridges_local;  // bridge endpoints back in per-side ids
                bridges_local.reserve(bg.bridge_edges.size());
                for (auto [u, v] : bg.bridge_edges)
                    bridges_local.emplace_back(u, v - num_shadow);
                BridgeGraph oracle_bg =
                    make_bridge_graph(num_shadow, shadow.edges, num_target,
                                      canonical_edges(std::move(known)), shadow_post, target_post,
                                      bridges_local);
                test_traversal = build_traversal(oracle_bg);
                note("test-pair traversal uses the oracle adjacency (withheld links visible)");
            }

            // Enclosing subgraph per unique pair, across all three sets.
            const AttackDatasets& ds = shared_datasets();
            auto extract_for = [&](const std::vector<AttackSample>& samples, bool is_test) {
                const TraversalIndex& tix =
                    is_test && cfg.oracle_test_adjacency ? test_traversal : traversal;
                for (const auto& s : samples) {
                    auto key = pipeline_detail::key_of(s);
                    if (subgraphs.count(key)) continue;
                    const Edge gp = pipeline_detail::global_pair(s, num_shadow);
                    const LinkMode mode = pipeline_detail::mode_of(s);
                    const std::uint64_t sg_seed =
                        derive_seed(cfg.seed, "subgraph-" + std::string(to_string(s.origin)) + "-" +
                                                  std::to_string(s.u) + "-" + std::to_string(s.v));
                    subgraphs.emplace(
                        key, zero_drnl
                                 ? pipeline_detail::uniform_edge_subgraph(
                                       bg, tix, gp, mode, cfg.hop_radius, cfg.max_subgraph_nodes,
                                       sg_seed)
                                 : extract_edge_subgraph(bg, tix, gp, cfg.hop_radius, mode,
                                                         cfg.max_subgraph_nodes, sg_seed));
                }
            };
            extract_for(ds.train, false);
            extract_for(ds.val, false);
            extract_for(ds.test, true);
            note("subgraphs: " + std::to_string(subgraphs.size()) + " extracted (radius " +
                 std::to_string(cfg.hop_radius) + ", cap " + std::to_string(cfg.max_subgraph_nodes) +
                 (zero_drnl ? ", uniform sampling, no distance labels)" : ")"));

            // Contrastive training on the training pairs' subgraphs.
            const ExtractorConfig ecfg = extractor_config_from(cfg);
            const int in_dim = static_cast<int>(bg.features.cols()) + cfg.onehot_width;
            extractor = init_extractor(ecfg, in_dim, derive_seed(cfg.seed, "extractor"));
            std::vector<pipeline_detail::SubKey> train_keys;
            for (const auto& s : ds.train) train_keys.push_back(pipeline_detail::key_of(s));
            std::sort(train_keys.begin(), train_keys.end());
            train_keys.erase(std::unique(train_keys.begin(), train_keys.end()), train_keys.end());
            Rng cap_rng(derive_seed(cfg.seed, "extractor-cap"));
            cap_rng.shuffle(train_keys);
            if (static_cast<int>(train_keys.size()) > cfg.extractor_train_cap)
                train_keys.resize(cfg.extractor_train_cap);
            std::vector<SubgraphSample> batch;
            batch.reserve(train_keys.size());
            for (const auto& k : train_keys) {
                const EdgeSubgraph& sub = subgraphs.at(k);
                batch.push_back(make_extractor_sample(
                    sub, augment_subgraph_features(sub, bg.features, cfg.onehot_width, zero_drnl),
                    ecfg.knn_k));
            }
            if (cfg.extractor_epochs > 0)
                res.extractor_trace =
                    train_extractor(extractor, batch, cfg.extractor_epochs, cfg.extractor_lr_psi,
                                    cfg.extractor_lr_theta, derive_seed(cfg.seed, "extractor-train"));
            pipeline_detail::write_trace_csv((fs::path(run_dir) / "extractor-trace.csv").string(),
                                             {"mi"}, {&res.extractor_trace});
            note("extractor: trained on " + std::to_string(batch.size()) + " subgraphs" +
                 (res.extractor_trace.empty()
                      ? ""
                      : ", objective " + std::to_string(res.extractor_trace.front()) + " -> " +
                            std::to_string(res.extractor_trace.back())));

            for (const auto& [key, sub] : subgraphs)
                structure_cache.emplace(
                    key, structure_features(
                             extractor,
                             augment_subgraph_features(sub, bg.features, cfg.onehot_width, zero_drnl),
                             sub.edges));
            {
                std::ofstream cachef(fs::path(run_dir) / "structure-features.csv");
                cachef << "origin,u,v,mode,radius";
                const Eigen::Index flen =
                    structure_cache.empty() ? 0 : structure_cache.begin()->second.size();
                for (Eigen::Index j = 0; j < flen; ++j) cachef << ",f" << j;
                cachef << '\n';
                char buf[48];
                for (const auto& [key, vec] : structure_cache) {
                    const auto& sub = subgraphs.at(key);
                    cachef << to_string(static_cast<PairOrigin>(std::get<0>(key))) << ','
                           << std::get<1>(key) << ',' << std::get<2>(key) << ','
                           << to_string(sub.mode) << ',' << sub.radius;
                    for (Eigen::Index j = 0; j < vec.size(); ++j) {
                        std::snprintf(buf, sizeof(buf), ",%.8g", vec(j));
                        cachef << buf;
                    }
                    cachef << '\n';
                }
            }
            if (until == PipelineStage::subgraphs) {
                note("stopped after subgraph/extractor stage");
                return res;
            }
        }
        if (until != PipelineStage::attack) {
            note("stopped: stage '" + std::string(to_string(until)) +
                 "' has no work for this config (no structure-based method)");
            return res;
        }

        // Attack stage per method.
        for (const auto& method : methods) {
            MetricsRow row;
            row.target = cfg.target_name;
            row.leak_rate = cfg.leak_rate;
            row.seed = cfg.seed;
            std::string feature_sig = "sim";
            StructureFn structure_fn;
            AttackDatasets ds;
            if (method == "lsa3") {
                row.shadow = "-";
                row.method = "lsa3";
                row.bridges = 0;
                ds = build_attack_datasets(split, num_target, nullptr,
                                           derive_seed(cfg.seed, "datasets-target-only"));
            } else if (method == "lsa4") {
                row.shadow = cfg.shadow_name;
                row.method = "lsa4";
                row.bridges = 0;
                ds = shared_datasets();
            } else {
                row.shadow = cfg.shadow_name;
                row.method = cfg.ablation.empty() ? "linkthief" : "linkthief-" + cfg.ablation;
                row.bridges = cfg.ablation == "no-bgg" || cfg.ablation == "no-esfe"
                                  ? 0
                                  : cfg.bridges_per_node;
                ds = shared_datasets();
                if (wants_structure) {
                    feature_sig = "sim+struct";
                    structure_fn = [&](const AttackSample& s) {
                        return structure_cache.at(pipeline_detail::key_of(s));
                    };
                }
            }

            featurize_attack_samples(ds.train, shadow_post, target_post, metric_fns, structure_fn);
            featurize_attack_samples(ds.val, shadow_post, target_post, metric_fns, structure_fn);
            featurize_attack_samples(ds.test, shadow_post, target_post, metric_fns, structure_fn);
            AttackTrainResult atr = train_attack_model(ds.train, ds.val, mlp_cfg,
                                                       derive_seed(cfg.seed, "attack-" + feature_sig));
            AttackMetrics met = evaluate_attack(atr.model, ds.test);
            row.auc = met.auc;
            row.asr = met.asr;
            row.tp = met.tp;
            row.fp = met.fp;
            row.tn = met.tn;
            row.fn = met.fn;
            res.rows.push_back(row);
            save_scatter_csv(diagnostic_scatter(atr.model, ds.test),
                             (fs::path(run_dir) / ("scatter-" + row.method + ".csv")).string());
            note("attack '" + row.method + "': val auc " + std::to_string(atr.best_val_auc) +
                 " (epoch " + std::to_string(atr.best_epoch) + "), test auc " +
                 std::to_string(met.auc) + ", asr " + std::to_string(met.asr));
        }

        save_metrics_csv(res.rows, (fs::path(run_dir) / "metrics.csv").string());
        {
            std::ofstream tf(fs::path(run_dir) / "metrics.txt");
            tf << format_metrics_table(res.rows);
        }
        note("done");
        return res;
    } catch (const std::exception& e) {
        std::ofstream marker(fs::path(run_dir) / "FAILED");
        marker << e.what() << '\n';
        note(std::string("FAILED: ") + e.what());
        throw;
    }
}

inline ExperimentConfig apply_sweep_axis(ExperimentConfig cfg, const std::string& axis, double v) {
    if (axis == "bridges") {
        cfg.bridges_per_node = static_cast<int>(std::llround(v));
    } else if (axis == "leak_rate") {
        cfg.leak_rate = v;
    } else if (axis == "k") {
        cfg.csbm_k = v;
    } else if (axis == "D") {
        if (!(v > 0.0 && v <= 1.0))
            throw std::invalid_argument("sweep axis D: values must lie in (0, 1]");
        cfg.csbm_q = cfg.csbm_p * (1.0 - v) / v;  // D = p/(p+q)
    } else {
        throw std::invalid_argument("unknown sweep axis '" + axis +
                                    "' (expected bridges, leak_rate, k, D)");
    }
    return cfg;
}

struct SweepRecord {
    double value = 0.0;
    int rep = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsRow row;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepRecord> records;
};

inline std::string format_sweep_value(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

/// Fully resolved config of one sweep point: axis applied, seed derived from
/// the base seed plus (axis, value, repetition).
inline ExperimentConfig sweep_point_config(const ExperimentConfig& base, const std::string& axis,
                                           double value, int rep) {
    ExperimentConfig cfg = apply_sweep_axis(base, axis, value);
    cfg.seed = derive_seed(base.seed, "sweep-" + axis + "-" + format_sweep_value(value) + "-rep" +
                                          std::to_string(rep));
    return cfg;
}

inline std::string sweep_point_dir(const std::string& sweep_dir, const std::string& axis,
                                   double value, int rep) {
    namespace fs = std::filesystem;
    return (fs::path(sweep_dir) /
            (axis + "-" + format_sweep_value(value) + "-rep" + std::to_string(rep)))
        .string();
}

/// sweep.csv: one row per (point, method) or per failed point.
/// plot.csv: per (value, method), mean and standard error over repetitions.
inline void write_sweep_outputs(const SweepResult& out, const std::string& sweep_dir) {
    namespace fs = std::filesystem;
    std::ofstream f(fs::path(sweep_dir) / "sweep.csv");
    if (!f) throw std::runtime_error("cannot write sweep.csv under " + sweep_dir);
    f << "axis,value,rep,seed,method,auc,asr,status,error\n";
    char buf[128];
    for (const auto& r : out.records) {
        std::string err = r.error;
        for (auto& ch : err)
            if (ch == ',' || ch == '\n') ch = ';';
        std::snprintf(buf, sizeof(buf), "%.17g,%d,%llu,", r.value, r.rep,
                      static_cast<unsigned long long>(r.seed));
        f << out.axis << ',' << buf << (r.ok ? r.row.method : std::string("-")) << ',';
        if (r.ok) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,ok,", r.row.auc, r.row.asr);
            f << buf << '\n';
        } else {
            f << ",,failed," << err << '\n';
        }
    }

    std::map<std::pair<double, std::string>, std::vector<const MetricsRow*>> groups;
    for (const auto& r : out.records)
        if (r.ok) groups[{r.value, r.row.method}].push_back(&r.row);
    std::ofstream pf(fs::path(sweep_dir) / "plot.csv");
    if (!pf) throw std::runtime_error("cannot write plot.csv under " + sweep_dir);
    pf << "axis,value,method,runs,mean_auc,stderr_auc,mean_asr,stderr_asr\n";
    for (const auto& [key, rows] : groups) {
        double sa = 0, sa2 = 0, sr = 0, sr2 = 0;
        for (const auto* row : rows) {
            sa += row->auc;
            sa2 += row->auc * row->auc;
            sr += row->asr;
            sr2 += row->asr * row->asr;
        }
        const double n = static_cast<double>(rows.size());
        const double ma = sa / n, mr = sr / n;
        const double ea = std::sqrt(std::max(sa2 / n - ma * ma, 0.0) / n);
        const double er = std::sqrt(std::max(sr2 / n - mr * mr, 0.0) / n);
        std::snprintf(buf, sizeof(buf), ",%.17g,", key.first);
        pf << out.axis << buf << key.second << ',' << rows.size();
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g\n", ma, ea, mr, er);
        pf << buf;
    }
}

/// One pipeline run per (value, repetition) with derived seeds; failures are
/// recorded and skipped, never fatal for the sweep. The command-line harness
/// offers the same sweep with points isolated in child processes.
inline SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis,
                             const std::vector<double>& values, int repeats,
                             const std::string& sweep_dir) {
    namespace fs = std::filesystem;
    if (values.empty()) throw std::invalid_argument("run_sweep: no axis values given");
    if (repeats < 1) throw std::invalid_argument("run_sweep: repeats must be >= 1");
    fs::create_directories(sweep_dir);
    SweepResult out;
    out.axis = axis;
    for (double v : values) {
        for (int rep = 0; rep < repeats; ++rep) {
            ExperimentConfig cfg = sweep_point_config(base, axis, v, rep);
            const std::string dir = sweep_point_dir(sweep_dir, axis, v, rep);
            try {
                PipelineResult pr = run_pipeline(cfg, dir);
                for (const auto& row : pr.rows)
                    out.records.push_back({v, rep, cfg.seed, true, "", row});
            } catch (const std::exception& e) {
                SweepRecord rec;
                rec.value = v;
                rec.rep = rep;
                rec.seed = cfg.seed;
                rec.ok = false;
                rec.error = e.what();
                out.records.push_back(std::move(rec));
            }
        }
    }
    write_sweep_outputs(out, sweep_dir);
    return out;
}

/// Convenience wrapper for the module-dropping variants; returns the
/// variant's metrics row.
inline MetricsRow run_ablation(ExperimentConfig cfg, const std::string& variant,
                               const std::string& run_dir) {
    if (variant != "no-bgg" && variant != "no-espm" && variant != "no-esfe")
        throw std::invalid_argument("unknown ablation variant '" + variant +
                                    "' (expected no-bgg, no-espm, no-esfe)");
    cfg.ablation = variant;
    cfg.methods = "linkthief";
    PipelineResult pr = run_pipeline(cfg, run_dir);
    return pr.rows.front();
}

} // namespace linkthief

#endif
