// Experiment harness for graph link stealing studies: synthetic data, victim
// training, bridge graphs, structure features, attack training, sweeps and
// report printing. Every subcommand is driven by a flat key = value config
// plus --set overrides; LINKTHIEF_OUT selects the output root.

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "linkthief/pipeline.hpp"
#include "linkthief/theory.hpp"

namespace fs = std::filesystem;
using namespace linkthief;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_root;
    std::string run_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_dir = true) {
    cmd->add_option("-c,--config", o.config_path, "config file (flat key = value lines)");
    cmd->add_option("-s,--set", o.overrides, "override one config key, key=value (repeatable)");
    cmd->add_option("-o,--out", o.out_root,
                    "output root (default: $LINKTHIEF_OUT, else config key out_dir)");
    if (with_dir)
        cmd->add_option("-d,--dir", o.run_dir,
                        "run directory; relative paths go under the output root "
                        "(default: run-<seed>)");
}

ExperimentConfig resolve_config(const CommonOpts& o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, config_detail::trim(kv.substr(0, eq)),
                         config_detail::trim(kv.substr(eq + 1)));
    }
    return cfg;
}

std::string out_root(const CommonOpts& o, const ExperimentConfig& cfg) {
    if (!o.out_root.empty()) return o.out_root;
    if (const char* env = std::getenv("LINKTHIEF_OUT"); env && *env) return env;
    return cfg.out_dir;
}

std::string resolve_run_dir(const CommonOpts& o, const ExperimentConfig& cfg) {
    const fs::path root = out_root(o, cfg);
    if (o.run_dir.empty()) return (root / ("run-" + std::to_string(cfg.seed))).string();
    const fs::path d = o.run_dir;
    return d.is_absolute() ? d.string() : (root / d).string();
}

void run_stage(const CommonOpts& o, PipelineStage until) {
    const ExperimentConfig cfg = resolve_config(o);
    const std::string dir = resolve_run_dir(o, cfg);
    PipelineResult res = run_pipeline(cfg, dir, until);
    std::cout << "run directory: " << dir << '\n';
    if (!res.rows.empty()) std::cout << format_metrics_table(res.rows);
}

void print_csv_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j >= width.size()) width.push_back(0);
            width[j] = std::max(width[j], r[j].size());
        }
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            std::cout << r[j];
            if (j + 1 < r.size()) std::cout << std::string(width[j] - r[j].size() + 2, ' ');
        }
        std::cout << '\n';
    }
}

std::string self_exe(const char* argv0) {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n > 0) {
        buf[n] = '\0';
        return buf;
    }
    return argv0;
}

struct PointJob {
    double value = 0.0;
    int rep = 0;
    std::uint64_t seed = 0;
    std::string dir;
    pid_t pid = -1;
    int exit_code = -1;
};

void spawn_point(const std::string& exe, PointJob& job) {
    const pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
        const std::string logp = job.dir + "/child.log";
        const int fd = ::open(logp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            ::dup2(fd, 1);
            ::dup2(fd, 2);
            ::close(fd);
        }
        std::vector<std::string> args = {exe,        "attack", "--config", job.dir + "/point.cfg",
                                         "--dir", job.dir};
        std::vector<char*> argv;
        argv.reserve(args.size() + 1);
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execv(exe.c_str(), argv.data());
        std::perror("execv");
        ::_exit(127);
    }
    job.pid = pid;
}

/// Each sweep point runs as its own process (up to --parallel at once), so a
/// crashing point cannot take the sweep down; its FAILED marker or exit code
/// is recorded and the sweep continues.
void run_sweep_processes(const ExperimentConfig& base, const std::string& axis,
                         const std::vector<double>& values, int repeats, int parallel,
                         const std::string& sweep_dir, const std::string& exe) {
    if (values.empty()) throw std::runtime_error("sweep: no axis values given");
    if (repeats < 1) throw std::runtime_error("sweep: --repeats must be >= 1");
    if (parallel < 1) throw std::runtime_error("sweep: --parallel must be >= 1");
    fs::create_directories(sweep_dir);

    std::vector<PointJob> jobs;
    for (double v : values)
        for (int rep = 0; rep < repeats; ++rep) {
            ExperimentConfig cfg = sweep_point_config(base, axis, v, rep);
            PointJob job;
            job.value = v;
            job.rep = rep;
            job.seed = cfg.seed;
            job.dir = sweep_point_dir(sweep_dir, axis, v, rep);
            fs::create_directories(job.dir);
            save_config(cfg, job.dir + "/point.cfg");
            jobs.push_back(std::move(job));
        }

    std::size_t next = 0;
    std::map<pid_t, std::size_t> running;
    while (next < jobs.size() || !running.empty()) {
        while (next < jobs.size() && static_cast<int>(running.size()) < parallel) {
            spawn_point(exe, jobs[next]);
            std::cout << "point " << axis << "=" << format_sweep_value(jobs[next].value) << " rep "
                      << jobs[next].rep << " -> " << jobs[next].dir << '\n';
            running[jobs[next].pid] = next;
            ++next;
        }
        int status = 0;
        const pid_t done = ::waitpid(-1, &status, 0);
        if (done < 0) throw std::runtime_error("waitpid failed");
        const auto it = running.find(done);
        if (it == running.end()) continue;
        jobs[it->second].exit_code =
            WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        running.erase(it);
    }

    SweepResult out;
    out.axis = axis;
    for (const auto& job : jobs) {
        const std::string metrics = job.dir + "/metrics.csv";
        const std::string marker = job.dir + "/FAILED";
        if (job.exit_code == 0 && fs::exists(metrics) && !fs::exists(marker)) {
            for (const auto& row : load_metrics_csv(metrics))
                out.records.push_back({job.value, job.rep, job.seed, true, "", row});
        } else {
            SweepRecord rec;
            rec.value = job.value;
            rec.rep = job.rep;
            rec.seed = job.seed;
            rec.ok = false;
            std::ifstream mf(marker);
            if (mf) std::getline(mf, rec.error);
            if (rec.error.empty())
                rec.error = "exit code " + std::to_string(job.exit_code);
            out.records.push_back(std::move(rec));
        }
    }
    write_sweep_outputs(out, sweep_dir);

    int failed = 0;
    for (const auto& r : out.records)
        if (!r.ok) ++failed;
    std::cout << "\nsweep directory: " << sweep_dir << '\n';
    if (failed) std::cout << failed << " point(s) FAILED (see sweep.csv)\n";
    print_csv_table(sweep_dir + "/plot.csv");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "link stealing attacks on GNN node classifiers: synthetic graphs, victim models,\n"
        "shadow-target bridge graphs, subgraph structure features, attack training,\n"
        "parameter sweeps and report printing"};
    app.require_subcommand(1);
    const std::string exe = self_exe(argv[0]);

    // gen-csbm
    auto* gen = app.add_subcommand("gen-csbm", "write a synthetic two-class graph dataset");
    CommonOpts gen_o;
    add_common(gen, gen_o, false);
    std::string gen_prefix;
    gen->add_option("--prefix", gen_prefix, "dataset file prefix (default: config target_name)");
    gen->callback([&] {
        const ExperimentConfig cfg = resolve_config(gen_o);
        const CsbmParams params = csbm_params_from(cfg);
        validate(params);
        // edge-list files cannot carry isolated vertices, so compact them away
        const Graph g =
            drop_isolated_nodes(generate_csbm(params, derive_seed(cfg.seed, "gen-csbm")));
        const fs::path root = out_root(gen_o, cfg);
        fs::create_directories(root);
        const std::string prefix = gen_prefix.empty() ? cfg.target_name : gen_prefix;
        const std::string edges = (root / (prefix + ".edges")).string();
        const std::string feats = (root / (prefix + "-features.csv")).string();
        const std::string labels = (root / (prefix + "-labels.csv")).string();
        save_edge_list(g, edges);
        save_features_csv(g, feats);
        save_labels_csv(g, labels);
        std::cout << g.num_nodes << " nodes, " << g.edges.size() << " edges\n"
                  << "target_edges = " << edges << '\n'
                  << "target_features = " << feats << '\n'
                  << "target_labels = " << labels << '\n';
    });

    // staged pipeline commands
    struct StageCmd {
        const char* name;
        const char* help;
        PipelineStage until;
    };
    const StageCmd stages[] = {
        {"train-victim", "data + victim stage: graphs, leak split, GNN checkpoints, posteriors",
         PipelineStage::victim},
        {"build-bridge", "everything through the bridge stage: learned shadow-target links",
         PipelineStage::bridge},
        {"extract",
         "everything through subgraph extraction and structure-feature training",
         PipelineStage::subgraphs},
        {"attack", "the complete pipeline: all stages plus attack metrics", PipelineStage::attack},
    };
    std::vector<CommonOpts> stage_opts(std::size(stages));
    for (std::size_t i = 0; i < std::size(stages); ++i) {
        auto* cmd = app.add_subcommand(stages[i].name, stages[i].help);
        add_common(cmd, stage_opts[i]);
        const PipelineStage until = stages[i].until;
        CommonOpts& opts = stage_opts[i];
        cmd->callback([&opts, until] { run_stage(opts, until); });
    }

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "print the metrics of an existing run");
    std::string ev_dir;
    ev->add_option("-d,--dir", ev_dir, "run directory")->required();
    ev->callback([&] {
        const std::string path = ev_dir + "/metrics.csv";
        if (!fs::exists(path))
            throw std::runtime_error("no metrics.csv in " + ev_dir +
                                     "; run the attack stage first");
        std::cout << format_metrics_table(load_metrics_csv(path));
    });

    // sweep
    auto* sw = app.add_subcommand("sweep", "one pipeline run per axis value and repetition");
    CommonOpts sw_o;
    add_common(sw, sw_o);
    std::string sw_axis;
    std::vector<double> sw_values;
    int sw_repeats = 1, sw_parallel = 1;
    sw->add_option("--axis", sw_axis, "bridges | leak_rate | k | D")
        ->required()
        ->check(CLI::IsMember({"bridges", "leak_rate", "k", "D"}));
    sw->add_option("--values", sw_values, "axis values, comma separated")
        ->required()
        ->delimiter(',');
    sw->add_option("--repeats", sw_repeats, "repetitions per value with derived seeds");
    sw->add_option("--parallel", sw_parallel, "sweep points run as independent processes; "
                                              "at most this many at once");
    sw->callback([&] {
        const ExperimentConfig base = resolve_config(sw_o);
        std::string dir = sw_o.run_dir;
        if (dir.empty()) dir = "sweep-" + sw_axis;
        const fs::path root = out_root(sw_o, base);
        const fs::path d = dir;
        run_sweep_processes(base, sw_axis, sw_values, sw_repeats, sw_parallel,
                            d.is_absolute() ? d.string() : (root / d).string(), exe);
    });

    // ablate
    auto* ab = app.add_subcommand("ablate", "full attack vs module-dropping variants");
    CommonOpts ab_o;
    add_common(ab, ab_o);
    std::string ab_variant = "all";
    ab->add_option("--variant", ab_variant, "no-bgg | no-espm | no-esfe | all")
        ->check(CLI::IsMember({"no-bgg", "no-espm", "no-esfe", "all"}));
    ab->callback([&] {
        ExperimentConfig cfg = resolve_config(ab_o);
        const std::string base_dir = resolve_run_dir(ab_o, cfg);
        std::vector<std::string> variants;
        if (ab_variant == "all")
            variants = {"no-bgg", "no-espm", "no-esfe"};
        else
            variants = {ab_variant};
        std::vector<MetricsRow> rows;
        ExperimentConfig full = cfg;
        full.methods = "linkthief";
        full.ablation = "";
        rows.push_back(run_pipeline(full, base_dir + "/full").rows.front());
        for (const auto& v : variants) rows.push_back(run_ablation(cfg, v, base_dir + "/" + v));
        save_metrics_csv(rows, base_dir + "/ablation.csv");
        std::cout << "ablation directory: " << base_dir << '\n'
                  << format_metrics_table(rows);
    });

    // verify-theory
    auto* vt = app.add_subcommand(
        "verify-theory", "analytic privacy-theft quantities vs Monte-Carlo estimates");
    CommonOpts vt_o;
    add_common(vt, vt_o, false);
    int vt_trials = 20;
    std::vector<double> vt_k{1.0}, vt_density{1.0};
    std::string vt_out;
    vt->add_option("--trials", vt_trials, "Monte-Carlo trials per grid point (>= 10)");
    vt->add_option("--k-values", vt_k, "posterior distance multipliers k")->delimiter(',');
    vt->add_option("--density-values", vt_density,
                   "target-node densities D in (0,1]; cross-class rate q = p(1-D)/D")
        ->delimiter(',');
    vt->add_option("--out-file", vt_out, "report CSV path (default <out>/theory.csv)");
    vt->callback([&] {
        const ExperimentConfig cfg = resolve_config(vt_o);
        CsbmParams base = csbm_params_from(cfg);
        std::vector<CsbmParams> grid;
        for (double k : vt_k)
            for (double D : vt_density) {
                if (!(D > 0.0 && D <= 1.0))
                    throw std::runtime_error("--density-values must lie in (0, 1]");
                CsbmParams p = base;
                p.k = k;
                p.q = base.p * (1.0 - D) / D;
                grid.push_back(p);
            }
        const auto reports = verify_proposition(grid, vt_trials, derive_seed(cfg.seed, "verify-theory"));
        fs::path out = vt_out.empty() ? fs::path(out_root(vt_o, cfg)) / "theory.csv"
                                      : fs::path(vt_out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        save_theory_csv(reports, out.string());
        std::printf("%6s %8s %8s %6s %6s %12s %12s %12s %12s %10s %8s\n", "n", "p", "q", "k", "D",
                    "analytic", "general", "delta", "empirical", "stderr", "relgap");
        for (const auto& r : reports) {
            const double rel = std::abs(r.empirical - r.pt_gen) / std::max(r.pt_gen, 1e-300);
            std::printf("%6d %8.4f %8.4f %6.2f %6.3f %12.6f %12.6f %12.6f %12.6f %10.6f %7.2f%%\n",
                        r.params.n, r.params.p, r.params.q, r.params.k, r.density, r.pt_opt,
                        r.pt_gen, r.delta, r.empirical, r.stderr_empirical, 100.0 * rel);
        }
        std::cout << "report: " << out.string() << '\n';
    });

    // report
    auto* rp = app.add_subcommand("report", "print the tables found in a run or sweep directory");
    std::string rp_dir;
    rp->add_option("-d,--dir", rp_dir, "run, ablation or sweep directory")->required();
    rp->callback([&] {
        bool found = false;
        if (fs::exists(rp_dir + "/metrics.csv")) {
            std::cout << format_metrics_table(load_metrics_csv(rp_dir + "/metrics.csv"));
            found = true;
        }
        if (fs::exists(rp_dir + "/ablation.csv")) {
            std::cout << format_metrics_table(load_metrics_csv(rp_dir + "/ablation.csv"));
            found = true;
        }
        for (const char* name : {"sweep.csv", "plot.csv", "theory.csv"})
            if (fs::exists(rp_dir + "/" + std::string(name))) {
                std::cout << name << ":\n";
                print_csv_table(rp_dir + "/" + std::string(name));
                std::cout << '\n';
                found = true;
            }
        if (fs::exists(rp_dir + "/FAILED")) {
            std::ifstream mf(rp_dir + "/FAILED");
            std::string msg;
            std::getline(mf, msg);
            std::cout << "run FAILED: " << msg << '\n';
            found = true;
        }
        if (!found)
            throw std::runtime_error("nothing to report in " + rp_dir +
                                     " (no metrics.csv, ablation.csv, sweep.csv or theory.csv)");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
