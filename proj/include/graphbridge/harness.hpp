#pragma once

// Scenario orchestration: wire a checkpoint, bridges, and a tuning mode to a
// downstream container, sweep seeds, and emit canonical-key JSON reports.
// Reports are byte-reproducible from (config, seeds); wall-clock fields are
// the only nondeterministic entries and can be masked for comparison.

#include <string>
#include <vector>

#include <json.hpp>

#include "graphbridge/bridges.hpp"
#include "graphbridge/checkpoint.hpp"
#include "graphbridge/container.hpp"
#include "graphbridge/gradcheck.hpp"
#include "graphbridge/sidetune.hpp"
#include "graphbridge/synth.hpp"

namespace graphbridge {

enum class Scenario { Graph2Graph, Node2Node, Graph2Node, Node2Graph, Graph2Edge, Graph2PtCld };

inline std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Graph2Graph: return "graph2graph";
        case Scenario::Node2Node: return "node2node";
        case Scenario::Graph2Node: return "graph2node";
        case Scenario::Node2Graph: return "node2graph";
        case Scenario::Graph2Edge: return "graph2edge";
        case Scenario::Graph2PtCld: return "graph2ptcld";
    }
    throw std::logic_error("bad Scenario");
}

inline Scenario scenario_from(const std::string& s) {
    if (s == "graph2graph") return Scenario::Graph2Graph;
    if (s == "node2node") return Scenario::Node2Node;
    if (s == "graph2node") return Scenario::Graph2Node;
    if (s == "node2graph") return Scenario::Node2Graph;
    if (s == "graph2edge") return Scenario::Graph2Edge;
    if (s == "graph2ptcld") return Scenario::Graph2PtCld;
    throw ConfigError("unknown scenario: " + s);
}

inline HeadKind scenario_head(Scenario s) {
    switch (s) {
        case Scenario::Graph2Graph:
        case Scenario::Node2Graph: return HeadKind::GraphCls;
        case Scenario::Node2Node:
        case Scenario::Graph2Node: return HeadKind::NodeCls;
        case Scenario::Graph2Edge: return HeadKind::EdgePred;
        case Scenario::Graph2PtCld: return HeadKind::PtcldCls;
    }
    throw std::logic_error("bad Scenario");
}

// ROC-AUC for the molecular-style and edge tables, accuracy elsewhere.
inline Metric scenario_metric(Scenario s) {
    return s == Scenario::Graph2Graph || s == Scenario::Graph2Edge ? Metric::RocAuc : Metric::Accuracy;
}

inline TaskKind scenario_data_kind(Scenario s) {
    switch (s) {
        case Scenario::Graph2Graph:
        case Scenario::Node2Graph: return TaskKind::GraphTask;
        case Scenario::Node2Node:
        case Scenario::Graph2Node:
        case Scenario::Graph2Edge: return TaskKind::NodeTask;
        case Scenario::Graph2PtCld: return TaskKind::PointCloudTask;
    }
    throw std::logic_error("bad Scenario");
}

struct ScenarioConfig {
    Scenario scenario = Scenario::Node2Node;
    std::string ckpt_path;  // unused for scratch
    std::string data_path;
    TuneMode mode = TuneMode::GSST;
    HeadKind head_kind = HeadKind::NodeCls;  // must stay consistent with the scenario
    AdapterKind adapter = AdapterKind::PadTruncate;
    std::uint64_t adapter_seed = 0;
    std::size_t side_hidden = 16;
    double alpha_init_raw = 0.0;
    double lr = 0.01;
    std::size_t epochs = 200;
    std::size_t patience = 20;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    double edge_holdout = 0.1;
    std::size_t knn_k = 8;
    std::uint64_t split_seed = 0;
    bool deterministic = true;
    // scratch-mode backbone (other modes take the checkpoint's config)
    BackboneKind scratch_kind = BackboneKind::GCN;
    std::size_t scratch_layers = 2;
    std::size_t scratch_hidden = 100;

    static ScenarioConfig for_scenario(Scenario s) {
        ScenarioConfig cfg;
        cfg.scenario = s;
        cfg.head_kind = scenario_head(s);
        cfg.adapter = s == Scenario::Graph2PtCld ? AdapterKind::LinearTrainable : AdapterKind::PadTruncate;
        return cfg;
    }

    void validate() const {
        if (head_kind != scenario_head(scenario))
            throw ConfigError("scenario " + scenario_name(scenario) + " requires head " +
                              head_kind_name(scenario_head(scenario)) + ", got " + head_kind_name(head_kind));
        if (seeds.empty()) throw ConfigError("scenario: empty seed list");
        if (mode != TuneMode::Scratch && ckpt_path.empty())
            throw ConfigError("scenario: mode " + tune_mode_name(mode) + " needs a checkpoint");
    }
};

inline nlohmann::json scenario_config_json(const ScenarioConfig& cfg) {
    return {{"scenario", scenario_name(cfg.scenario)},
            {"ckpt", cfg.ckpt_path},
            {"data", cfg.data_path},
            {"mode", tune_mode_name(cfg.mode)},
            {"head", head_kind_name(cfg.head_kind)},
            {"adapter", adapter_kind_name(cfg.adapter)},
            {"adapter_seed", cfg.adapter_seed},
            {"side_hidden", cfg.side_hidden},
            {"alpha_init_raw", cfg.alpha_init_raw},
            {"lr", cfg.lr},
            {"epochs", cfg.epochs},
            {"patience", cfg.patience},
            {"edge_holdout", cfg.edge_holdout},
            {"knn_k", cfg.knn_k},
            {"split_seed", cfg.split_seed},
            {"deterministic", cfg.deterministic},
            {"metric", metric_name(scenario_metric(cfg.scenario))}};
}

struct Report {
    ScenarioConfig config;
    std::vector<std::uint64_t> seeds;
    std::vector<TrainReport> runs;  // aligned with seeds
    double mean_test = 0.0;
    double std_test = 0.0;
    double mean_seconds_to_converge = 0.0;
    double mean_convergence_epoch = 0.0;
    std::size_t tunable_params = 0;
    double tunable_fraction_vs_ft = 0.0;
};

inline nlohmann::json train_report_json(const TrainReport& r, std::uint64_t seed) {
    nlohmann::json j;
    j["seed"] = seed;
    j["mode"] = r.mode;
    j["tunable_params"] = r.tunable_params;
    j["epochs_run"] = r.epochs_run;
    j["epochs_to_converge"] = r.convergence_epoch;
    j["seconds"] = r.seconds_total;
    j["seconds_to_converge"] = r.seconds_to_converge;
    j["metrics"] = {{"train", r.train_metric}, {"val", r.val_metric}, {"test", r.test_metric}};
    j["loss_trajectory"] = r.epoch_loss;
    j["val_trajectory"] = r.epoch_val_metric;
    if (!r.confusion.empty()) j["confusion"] = r.confusion;
    return j;
}

inline nlohmann::json report_json(const Report& rep) {
    nlohmann::json j;
    j["config"] = scenario_config_json(rep.config);
    j["seeds"] = rep.seeds;
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.runs.size(); ++i) runs.push_back(train_report_json(rep.runs[i], rep.seeds[i]));
    j["runs"] = std::move(runs);
    j["aggregate"] = {{"mean_test", rep.mean_test},
                      {"std_test", rep.std_test},
                      {"mean_seconds_to_converge", rep.mean_seconds_to_converge},
                      {"mean_convergence_epoch", rep.mean_convergence_epoch}};
    j["tunable_params"] = rep.tunable_params;
    j["tunable_fraction_vs_ft"] = rep.tunable_fraction_vs_ft;
    return j;
}

// Zeroes every wall-clock-derived field, for byte comparisons.
inline void mask_timing(nlohmann::json& j) {
    if (j.is_object()) {
        for (auto& [key, value] : j.items()) {
            if (key == "seconds" || key == "seconds_to_converge" || key == "mean_seconds_to_converge" ||
                key == "speedup_pct")
                value = 0.0;
            else
                mask_timing(value);
        }
    } else if (j.is_array()) {
        for (auto& v : j) mask_timing(v);
    }
}

// Prepares the downstream task for a scenario: builds k-NN graphs for point
// clouds, reformulates edge tasks, applies default splits when absent.
inline TaskData prepare_task(const ScenarioConfig& cfg, const GraphSet& dataset) {
    if (dataset.kind != scenario_data_kind(cfg.scenario))
        throw ConfigError("scenario " + scenario_name(cfg.scenario) + " expects a " +
                          task_kind_name(scenario_data_kind(cfg.scenario)) + " container, got " +
                          task_kind_name(dataset.kind));
    if (cfg.scenario == Scenario::Graph2Edge) {
        return make_edge_task_data(dataset, cfg.edge_holdout, cfg.split_seed);
    }
    GraphSet prepared = dataset;
    if (cfg.scenario == Scenario::Graph2PtCld) prepared = knn_graphset(prepared, cfg.knn_k);
    prepared = make_splits(prepared, {0.6, 0.2, 0.2}, cfg.split_seed);
    return make_task_data(prepared);
}

inline AdapterSpec make_adapter_spec(const ScenarioConfig& cfg, std::size_t data_dim,
                                     std::size_t model_in_dim) {
    if (cfg.mode == TuneMode::Scratch) return {AdapterKind::Identity, data_dim, data_dim};
    AdapterSpec spec{cfg.adapter, data_dim, model_in_dim, cfg.adapter_seed};
    if (spec.kind == AdapterKind::Identity && data_dim != model_in_dim)
        throw ConfigError("identity adapter with data dim " + std::to_string(data_dim) +
                          " vs checkpoint in_dim " + std::to_string(model_in_dim) +
                          "; pick pad_truncate, rand_project or linear_trainable");
    return spec;
}

inline Report run_scenario(const ScenarioConfig& cfg, const GraphSet& dataset, const Checkpoint* ckpt) {
    cfg.validate();
    if (cfg.mode != TuneMode::Scratch && ckpt == nullptr)
        throw ConfigError("scenario: checkpoint missing for mode " + tune_mode_name(cfg.mode));
    TaskData data = prepare_task(cfg, dataset);
    Metric metric = scenario_metric(cfg.scenario);

    BackboneConfig backbone;
    if (cfg.mode == TuneMode::Scratch) {
        backbone = {.kind = cfg.scratch_kind,
                    .layers = cfg.scratch_layers,
                    .in_dim = dataset.feature_dim,
                    .hidden_dim = cfg.scratch_hidden};
    } else {
        backbone = ckpt->config;
    }
    AdapterSpec adapter = make_adapter_spec(cfg, dataset.feature_dim, backbone.in_dim);
    HeadSpec head{cfg.head_kind, cfg.side_hidden, data.num_classes};

    Report rep;
    rep.config = cfg;
    rep.seeds = cfg.seeds;
    for (std::uint64_t seed : cfg.seeds) {
        SideTuneConfig tune_cfg{.mode = cfg.mode,
                                .side_hidden = cfg.side_hidden,
                                .alpha_init_raw = cfg.alpha_init_raw,
                                .lr = cfg.lr,
                                .epochs = cfg.epochs,
                                .patience = cfg.patience,
                                .seed = seed};
        SideTuneModel model = build_sidetune(tune_cfg, ckpt, backbone, adapter, head);
        rep.runs.push_back(tune(model, data, tune_cfg, metric));
        rep.tunable_params = model.count_tunables();
    }

    double sum = 0.0, sumsq = 0.0, sum_sec = 0.0, sum_epoch = 0.0;
    for (const TrainReport& r : rep.runs) {
        sum += r.test_metric;
        sumsq += r.test_metric * r.test_metric;
        sum_sec += r.seconds_to_converge;
        sum_epoch += static_cast<double>(r.convergence_epoch);
    }
    double n = static_cast<double>(rep.runs.size());
    rep.mean_test = sum / n;
    rep.std_test = std::sqrt(std::max(0.0, sumsq / n - rep.mean_test * rep.mean_test));
    rep.mean_seconds_to_converge = sum_sec / n;
    rep.mean_convergence_epoch = sum_epoch / n;

    BackboneConfig ft_backbone = backbone;
    std::size_t ft_count = count_tunables_closed(
        TuneMode::FT, ft_backbone, cfg.side_hidden,
        HeadSpec{cfg.head_kind, ft_backbone.hidden_dim, data.num_classes},
        cfg.mode == TuneMode::Scratch ? AdapterSpec{AdapterKind::Identity, dataset.feature_dim, dataset.feature_dim}
                                      : AdapterSpec{cfg.adapter, dataset.feature_dim, backbone.in_dim, cfg.adapter_seed});
    rep.tunable_fraction_vs_ft = static_cast<double>(rep.tunable_params) / static_cast<double>(ft_count);
    return rep;
}

// Relative reduction in mean wall-clock-to-convergence versus scratch
// training, in percent.
inline double speedup(const Report& method, const Report& scratch) {
    if (method.seeds != scratch.seeds) throw ConfigError("speedup: reports cover different seed sets");
    if (method.config.data_path != scratch.config.data_path ||
        method.config.scenario != scratch.config.scenario)
        throw ConfigError("speedup: reports cover different tasks");
    double t_scratch = scratch.mean_seconds_to_converge;
    double t_method = method.mean_seconds_to_converge;
    if (t_scratch <= 0.0) throw NumericError("speedup: scratch convergence time is zero");
    return (t_scratch - t_method) / t_scratch * 100.0;
}

// ---------------------------------------------------------------------------
// Parameter-size audit (five-layer configs by default)
// ---------------------------------------------------------------------------

struct AuditOptions {
    std::vector<TuneMode> modes = {TuneMode::GSST, TuneMode::GMST, TuneMode::FT};
    std::vector<BackboneKind> backbones = {BackboneKind::GCN, BackboneKind::GAT, BackboneKind::GIN};
    std::size_t layers = 5;
    std::size_t in_dim = 500;
    std::size_t hidden_dim = 100;
    std::size_t side_hidden = 16;
    std::int64_t num_classes = 7;
    bool enforce = true;  // check the constancy and fraction claims
};

struct AuditRow {
    std::string mode;
    std::string backbone;
    std::size_t tunable;
    std::size_t ft_tunable;
    double fraction_vs_ft;
};

struct AuditTable {
    AuditOptions options;
    std::vector<AuditRow> rows;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config"] = {{"layers", options.layers},
                       {"in_dim", options.in_dim},
                       {"hidden_dim", options.hidden_dim},
                       {"side_hidden", options.side_hidden},
                       {"num_classes", options.num_classes}};
        nlohmann::json rws = nlohmann::json::array();
        for (const auto& r : rows)
            rws.push_back({{"mode", r.mode},
                           {"backbone", r.backbone},
                           {"tunable", r.tunable},
                           {"ft_tunable", r.ft_tunable},
                           {"fraction_vs_ft", r.fraction_vs_ft}});
        j["rows"] = std::move(rws);
        return j;
    }

    std::string to_csv() const {
        std::string out = "mode,backbone,tunable,ft_tunable,fraction_vs_ft\n";
        for (const auto& r : rows)
            out += r.mode + "," + r.backbone + "," + std::to_string(r.tunable) + "," +
                   std::to_string(r.ft_tunable) + "," + format_f64(r.fraction_vs_ft) + "\n";
        return out;
    }
};

inline AuditTable audit_params(const AuditOptions& opt) {
    AuditTable table;
    table.options = opt;
    HeadSpec head{HeadKind::NodeCls, opt.side_hidden, opt.num_classes};
    AdapterSpec adapter{AdapterKind::PadTruncate, opt.in_dim, opt.in_dim};
    std::size_t gsst_ref = 0, gmst_ref = 0;
    for (BackboneKind kind : opt.backbones) {
        BackboneConfig bc{.kind = kind, .layers = opt.layers, .in_dim = opt.in_dim, .hidden_dim = opt.hidden_dim};
        HeadSpec ft_head{HeadKind::NodeCls, bc.hidden_dim, opt.num_classes};
        std::size_t ft_count = count_tunables_closed(TuneMode::FT, bc, opt.side_hidden, ft_head, adapter);
        for (TuneMode mode : opt.modes) {
            std::size_t count =
                mode == TuneMode::FT || mode == TuneMode::Scratch
                    ? ft_count
                    : count_tunables_closed(mode, bc, opt.side_hidden, head, adapter);
            double fraction = static_cast<double>(count) / static_cast<double>(ft_count);
            table.rows.push_back({tune_mode_name(mode), backbone_kind_name(kind), count, ft_count, fraction});
            if (opt.enforce) {
                if (mode == TuneMode::GSST) {
                    if (gsst_ref == 0) gsst_ref = count;
                    else if (count != gsst_ref)
                        throw ConfigError("audit: gsst tunable count varies across backbones");
                }
                if (mode == TuneMode::GMST) {
                    if (gmst_ref == 0) gmst_ref = count;
                    else if (count != gmst_ref)
                        throw ConfigError("audit: gmst tunable count varies across backbones");
                }
                if ((mode == TuneMode::GSST || mode == TuneMode::GMST) && fraction > 0.20)
                    throw ConfigError("audit: " + tune_mode_name(mode) + "/" + backbone_kind_name(kind) +
                                      " fraction " + format_f64(fraction) + " exceeds 0.20");
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Gradient suite: grad_check of every tuning mode x backbone through the full
// forward + head + loss composition on a random 10-node graph.
// ---------------------------------------------------------------------------

struct GradSuiteRow {
    std::string mode;
    std::string backbone;
    bool pass = false;
    double worst_rel_err = 0.0;
};

inline std::vector<GradSuiteRow> gradient_suite(double tol = 1e-4, std::size_t hidden = 24,
                                                std::uint64_t seed = 0) {
    Rng rng(seed ^ 0x97ad5eed);
    const std::size_t n = 10, in_dim = 6;
    Graph g;
    g.num_nodes = n;
    g.adj.num_nodes = n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < 0.35) {
                g.adj.edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
                g.adj.edges.emplace_back(static_cast<std::int64_t>(j), static_cast<std::int64_t>(i));
            }
    std::sort(g.adj.edges.begin(), g.adj.edges.end());
    g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);
    std::vector<double> feats(n * in_dim);
    for (double& v : feats) v = rng.uniform(-1.0, 1.0);
    g.features = Tensor({n, in_dim}, std::move(feats));
    std::vector<std::int64_t> targets;
    for (std::size_t i = 0; i < n; ++i) targets.push_back(static_cast<std::int64_t>(rng.below(3)));
    GraphContext ctx = GraphContext::make(g.adj);

    std::vector<GradSuiteRow> rows;
    for (BackboneKind kind : {BackboneKind::GCN, BackboneKind::GAT, BackboneKind::GIN}) {
        Checkpoint ck = Checkpoint::fresh(
            {.kind = kind, .layers = 2, .in_dim = in_dim, .hidden_dim = hidden}, seed + 17);
        for (TuneMode mode : {TuneMode::GBST, TuneMode::GAST, TuneMode::GSST, TuneMode::GMST, TuneMode::FT,
                              TuneMode::Scratch}) {
            SideTuneConfig cfg{.mode = mode, .side_hidden = 8, .seed = seed + 5};
            SideTuneModel model = build_sidetune(cfg, &ck, ck.config,
                                                 {AdapterKind::Identity, in_dim, in_dim},
                                                 {HeadKind::NodeCls, 8, 3});
            auto forward = [&](const std::vector<Tensor>& p) {
                Tensor z = sidetune_repr(model, p, ctx, g.features);
                Tensor logits = add(matmul(z, p[static_cast<std::size_t>(model.head_w)]),
                                    p[static_cast<std::size_t>(model.head_b)]);
                return cross_entropy(log_softmax(logits), targets);
            };
            auto res = grad_check(forward, model.trainable, tol);
            rows.push_back({tune_mode_name(mode), backbone_kind_name(kind), res.all_pass, res.worst()});
        }
    }
    return rows;
}

}  // namespace graphbridge
