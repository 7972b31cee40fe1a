#ifndef LINKTHIEF_CONFIG_HPP
#define LINKTHIEF_CONFIG_HPP

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "linkthief/attack.hpp"
#include "linkthief/bridge.hpp"
#include "linkthief/extractor.hpp"
#include "linkthief/graph.hpp"
#include "linkthief/victim.hpp"

namespace linkthief {

/// Every knob of an experiment in one flat structure. The on-disk format is
/// plain "key = value" lines with '#' comments; parsing starts from the
/// defaults below, so a config file only needs the keys it overrides, and
/// serialize_config writes every field back out for reproducible snapshots.
struct ExperimentConfig {
    // Data: file paths take precedence; empty paths mean synthetic graphs.
    std::string target_name = "csbm";
    std::string shadow_name = "csbm-shadow";
    std::string target_edges;    // edge-list path; empty -> sample a two-class graph
    std::string target_features; // node-feature CSV; empty -> degree buckets
    std::string target_labels;   // node-label CSV; empty -> spectral bipartition
    std::string shadow_edges;
    std::string shadow_features;
    std::string shadow_labels;

    // Synthetic graph parameters (used when the matching path is empty).
    int csbm_n = 400;
    double csbm_p = 0.05;
    double csbm_q = 0.0;
    double csbm_mu = 0.1;
    double csbm_k = 1.0;
    int csbm_d = 8;

    // Attack scenario.
    double leak_rate = 0.3;
    int bridges_per_node = 10;
    int hop_radius = 1;
    int max_subgraph_nodes = 100;
    int onehot_width = 16;
    std::string methods = "linkthief,lsa4,lsa3";  // comma list, each run in order
    std::string ablation;                         // "", no-bgg, no-espm, no-esfe
    std::string similarity_metrics = "all";
    bool random_bridges = false;                  // skip bridge training, sample the uniform policy
    bool oracle_test_adjacency = false;           // let test-pair extraction traverse withheld edges

    // Victim model.
    int gcn_hidden = 16;
    int gcn_epochs = 200;
    double gcn_lr = 0.01;
    double gcn_weight_decay = 0.0;
    double gcn_train_fraction = 0.8;

    // Bridge training.
    int bridge_epochs = 30;
    double bridge_lr_scores = 0.01;
    double bridge_lr_encoder = 0.01;
    int bridge_encoder_hidden = 16;
    double sinkhorn_epsilon = 0.05;
    int sinkhorn_iters = 200;
    bool reward_baseline = true;

    // Structure-feature extractor.
    int extractor_epochs = 30;
    double extractor_lr_psi = 0.01;
    double extractor_lr_theta = 0.01;
    int extractor_knn_k = 3;
    int extractor_pool_size = 10;
    std::string extractor_channels = "32,32,1";
    int extractor_train_cap = 512;  // max subgraphs fed to the estimator per epoch
    bool cross_subgraph_negatives = false;

    // Attack model.
    std::string attack_hidden = "64,32";
    int attack_epochs = 100;
    double attack_lr = 0.001;

    // Plumbing.
    std::uint64_t seed = 17;
    std::string out_dir = "runs";
};

namespace config_detail {

template <class F>
void for_each_field(ExperimentConfig& c, F&& f) {
    f("target_name", c.target_name);
    f("shadow_name", c.shadow_name);
    f("target_edges", c.target_edges);
    f("target_features", c.target_features);
    f("target_labels", c.target_labels);
    f("shadow_edges", c.shadow_edges);
    f("shadow_features", c.shadow_features);
    f("shadow_labels", c.shadow_labels);
    f("csbm_n", c.csbm_n);
    f("csbm_p", c.csbm_p);
    f("csbm_q", c.csbm_q);
    f("csbm_mu", c.csbm_mu);
    f("csbm_k", c.csbm_k);
    f("csbm_d", c.csbm_d);
    f("leak_rate", c.leak_rate);
    f("bridges_per_node", c.bridges_per_node);
    f("hop_radius", c.hop_radius);
    f("max_subgraph_nodes", c.max_subgraph_nodes);
    f("onehot_width", c.onehot_width);
    f("methods", c.methods);
    f("ablation", c.ablation);
    f("similarity_metrics", c.similarity_metrics);
    f("random_bridges", c.random_bridges);
    f("oracle_test_adjacency", c.oracle_test_adjacency);
    f("gcn_hidden", c.gcn_hidden);
    f("gcn_epochs", c.gcn_epochs);
    f("gcn_lr", c.gcn_lr);
    f("gcn_weight_decay", c.gcn_weight_decay);
    f("gcn_train_fraction", c.gcn_train_fraction);
    f("bridge_epochs", c.bridge_epochs);
    f("bridge_lr_scores", c.bridge_lr_scores);
    f("bridge_lr_encoder", c.bridge_lr_encoder);
    f("bridge_encoder_hidden", c.bridge_encoder_hidden);
    f("sinkhorn_epsilon", c.sinkhorn_epsilon);
    f("sinkhorn_iters", c.sinkhorn_iters);
    f("reward_baseline", c.reward_baseline);
    f("extractor_epochs", c.extractor_epochs);
    f("extractor_lr_psi", c.extractor_lr_psi);
    f("extractor_lr_theta", c.extractor_lr_theta);
    f("extractor_knn_k", c.extractor_knn_k);
    f("extractor_pool_size", c.extractor_pool_size);
    f("extractor_channels", c.extractor_channels);
    f("extractor_train_cap", c.extractor_train_cap);
    f("cross_subgraph_negatives", c.cross_subgraph_negatives);
    f("attack_hidden", c.attack_hidden);
    f("attack_epochs", c.attack_epochs);
    f("attack_lr", c.attack_lr);
    f("seed", c.seed);
    f("out_dir", c.out_dir);
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline void assign(const std::string& key, const std::string& value, std::string& out) {
    (void)key;
    out = value;
}
inline void assign(const std::string& key, const std::string& value, int& out) {
    try {
        std::size_t pos = 0;
        out = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + value + "'");
    }
}
inline void assign(const std::string& key, const std::string& value, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value + "'");
    }
}
inline void assign(const std::string& key, const std::string& value, bool& out) {
    if (value == "true" || value == "1") out = true;
    else if (value == "false" || value == "0") out = false;
    else throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + value + "'");
}
inline void assign(const std::string& key, const std::string& value, std::uint64_t& out) {
    try {
        std::size_t pos = 0;
        out = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': expected an unsigned integer, got '" +
                                    value + "'");
    }
}

inline std::string format(const std::string& v) { return v; }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(bool v) { return v ? "true" : "false"; }
inline std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace config_detail

inline std::vector<int> parse_int_list(const std::string& csv, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = config_detail::trim(tok);
        if (tok.empty()) continue;
        int v = 0;
        config_detail::assign(what, tok, v);
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(what + ": empty list");
    return out;
}

inline std::vector<std::string> parse_name_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = config_detail::trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

/// Apply one "key = value" assignment; unknown keys are an error.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
    bool found = false;
    config_detail::for_each_field(c, [&](const char* name, auto& field) {
        if (!found && key == name) {
            config_detail::assign(key, value, field);
            found = true;
        }
    });
    if (!found) throw std::invalid_argument("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value', got '" + line + "'");
        set_config_value(base, config_detail::trim(line.substr(0, eq)),
                         config_detail::trim(line.substr(eq + 1)));
    }
    return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str(), base);
}

/// Writes every field in declaration order; parse_config(serialize_config(c))
/// reproduces c exactly.
inline std::string serialize_config(const ExperimentConfig& c) {
    std::string out;
    config_detail::for_each_field(const_cast<ExperimentConfig&>(c),
                                  [&](const char* name, auto& field) {
                                      out += name;
                                      out += " = ";
                                      out += config_detail::format(field);
                                      out += "\n";
                                  });
    return out;
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << serialize_config(c);
    if (!f.good()) throw std::runtime_error("write failed: " + path);
}

inline CsbmParams csbm_params_from(const ExperimentConfig& c) {
    CsbmParams p;
    p.n = c.csbm_n;
    p.p = c.csbm_p;
    p.q = c.csbm_q;
    p.mu = c.csbm_mu;
    p.k = c.csbm_k;
    p.d = c.csbm_d;
    return p;
}

inline GcnConfig gcn_config_from(const ExperimentConfig& c) {
    GcnConfig g;
    g.hidden = c.gcn_hidden;
    g.epochs = c.gcn_epochs;
    g.lr = c.gcn_lr;
    g.weight_decay = c.gcn_weight_decay;
    g.train_fraction = c.gcn_train_fraction;
    return g;
}

inline BridgeConfig bridge_config_from(const ExperimentConfig& c) {
    BridgeConfig b;
    b.samples_per_node = c.bridges_per_node;
    b.epochs = c.bridge_epochs;
    b.lr_scores = c.bridge_lr_scores;
    b.lr_encoder = c.bridge_lr_encoder;
    b.encoder_hidden = c.bridge_encoder_hidden;
    b.sinkhorn_epsilon = c.sinkhorn_epsilon;
    b.sinkhorn_iters = c.sinkhorn_iters;
    b.reward_baseline = c.reward_baseline;
    return b;
}

inline ExtractorConfig extractor_config_from(const ExperimentConfig& c) {
    ExtractorConfig e;
    e.channels = parse_int_list(c.extractor_channels, "extractor_channels");
    e.pool_size = c.extractor_pool_size;
    e.knn_k = c.extractor_knn_k;
    e.cross_subgraph_negatives = c.cross_subgraph_negatives;
    return e;
}

inline MlpConfig mlp_config_from(const ExperimentConfig& c) {
    MlpConfig m;
    m.hidden = parse_int_list(c.attack_hidden, "attack_hidden");
    m.epochs = c.attack_epochs;
    m.lr = c.attack_lr;
    return m;
}

inline std::vector<NamedMetric> metrics_from(const ExperimentConfig& c) {
    if (c.similarity_metrics == "all" || c.similarity_metrics.empty())
        return default_similarity_metrics();
    return resolve_similarity_metrics(c.similarity_metrics);
}

inline void validate_config(const ExperimentConfig& c) {
    if (c.leak_rate < 0.0 || c.leak_rate > 1.0)
        throw std::invalid_argument("config: leak_rate must lie in [0, 1]");
    if (c.bridges_per_node < 0)
        throw std::invalid_argument("config: bridges_per_node must be >= 0");
    if (c.hop_radius < 1) throw std::invalid_argument("config: hop_radius must be >= 1");
    if (c.max_subgraph_nodes < 2)
        throw std::invalid_argument("config: max_subgraph_nodes must be >= 2");
    if (c.onehot_width < 2) throw std::invalid_argument("config: onehot_width must be >= 2");
    if (c.extractor_train_cap < 1)
        throw std::invalid_argument("config: extractor_train_cap must be >= 1");
    if (c.extractor_epochs < 0 || c.bridge_epochs < 0)
        throw std::invalid_argument("config: epoch counts must be >= 0");
    if (c.gcn_epochs < 1 || c.attack_epochs < 1)
        throw std::invalid_argument("config: gcn_epochs and attack_epochs must be >= 1");
    if (c.gcn_lr <= 0 || c.attack_lr <= 0 || c.bridge_lr_scores <= 0 || c.bridge_lr_encoder <= 0 ||
        c.extractor_lr_psi <= 0 || c.extractor_lr_theta <= 0)
        throw std::invalid_argument("config: learning rates must be > 0");
    if (c.sinkhorn_epsilon <= 0 || c.sinkhorn_iters < 1)
        throw std::invalid_argument("config: sinkhorn_epsilon > 0 and sinkhorn_iters >= 1 required");
    if (c.target_edges.empty()) validate(csbm_params_from(c));
    parse_int_list(c.extractor_channels, "extractor_channels");
    parse_int_list(c.attack_hidden, "attack_hidden");
    metrics_from(c);
    if (!c.ablation.empty() && c.ablation != "no-bgg" && c.ablation != "no-espm" &&
        c.ablation != "no-esfe")
        throw std::invalid_argument("config: ablation must be one of no-bgg, no-espm, no-esfe");
    const auto methods = parse_name_list(c.methods);
    if (methods.empty()) throw std::invalid_argument("config: methods must name at least one attack");
    for (const auto& m : methods)
        if (m != "linkthief" && m != "lsa4" && m != "lsa3")
            throw std::invalid_argument("config: unknown method '" + m +
                                        "' (expected linkthief, lsa4, lsa3)");
}

} // namespace linkthief

#endif
