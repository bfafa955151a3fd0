// Command-line harness: synthetic data, CSV conversion, contrastive
// pre-training, side-tuning scenarios, parameter audits and gradient checks.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical abort.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include <graphbridge/graphbridge.hpp>

using namespace graphbridge;

namespace {

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(static_cast<std::size_t>(std::stoull(tok)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty list: '" + csv + "'");
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    auto sizes = parse_size_list(csv);
    return {sizes.begin(), sizes.end()};
}

void write_loss_csv(const std::string& path, const std::vector<double>& losses) {
    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        csv += std::to_string(i) + "," + format_f64(losses[i]) + "\n";
    write_text_file(path, csv);
}

struct SynthArgs {
    std::string kind, out, blocks = "30,30";
    std::uint64_t seed = 0, split_seed = 0;
    double p_in = 0.5, p_out = 0.05, noise = 1.0;
    std::size_t feature_dim = 0, count = 100, min_nodes = 6, max_nodes = 14, points = 64, classes = 3;
    bool with_splits = false;
};

int run_synth(const SynthArgs& a) {
    GraphSet set;
    if (a.kind == "sbm") {
        set = synth_sbm({.block_sizes = parse_size_list(a.blocks),
                         .p_in = a.p_in,
                         .p_out = a.p_out,
                         .feature_dim = a.feature_dim,
                         .feature_noise = a.noise},
                        a.seed);
    } else if (a.kind == "mol") {
        set = synth_mol({.count = a.count,
                         .min_nodes = a.min_nodes,
                         .max_nodes = a.max_nodes,
                         .feature_dim = a.feature_dim == 0 ? 8 : a.feature_dim},
                        a.seed);
    } else if (a.kind == "ptcld") {
        set = synth_ptcld({.count = a.count, .points = a.points, .num_classes = a.classes}, a.seed);
    } else {
        throw ConfigError("synth: unknown kind '" + a.kind + "' (expected sbm|mol|ptcld)");
    }
    if (a.with_splits) set = make_splits(set, {0.6, 0.2, 0.2}, a.split_seed);
    save_container(set, a.out);
    std::printf("wrote %s: kind=%s graphs=%zu classes=%lld feature_dim=%zu\n", a.out.c_str(),
                task_kind_name(set.kind).c_str(), set.graphs.size(),
                static_cast<long long>(set.num_classes), set.feature_dim);
    return 0;
}

struct ConvertArgs {
    std::string edges, features, labels, kind = "node_task", out;
    bool directed = false;
};

int run_convert(const ConvertArgs& a) {
    GraphSet set = convert_edgelist(a.edges, a.features, a.labels, task_kind_from(a.kind), !a.directed);
    save_container(set, a.out);
    const Graph& g = set.graphs[0];
    std::printf("wrote %s: nodes=%zu edges=%zu classes=%lld feature_dim=%zu\n", a.out.c_str(), g.num_nodes,
                g.adj.edges.size(), static_cast<long long>(set.num_classes), set.feature_dim);
    return 0;
}

struct PretrainArgs {
    std::string data, out, method = "graphcl", backbone = "gcn";
    std::size_t layers = 2, hidden = 100, epochs = 20, batch_size = 32;
    std::size_t chunk_size = 50, chunk_count = 64;
    double lr = 1e-3, temperature = 0.5, eta = 1.0;
    std::uint64_t seed = 0;
    bool deterministic = false;
};

int run_pretrain(const PretrainArgs& a) {
    GraphSet data = load_container(a.data);
    if (data.kind == TaskKind::NodeTask) {
        std::printf("node-task corpus: chunking into %zu random-walk subgraphs of %zu nodes\n",
                    a.chunk_count, a.chunk_size);
        data = chunk_node_dataset(data, a.chunk_size, a.chunk_count, a.seed ^ 0xc4a1);
    } else if (data.kind != TaskKind::GraphTask) {
        throw ConfigError("pretrain: expected a graph_task or node_task container");
    }
    BackboneConfig backbone{.kind = backbone_kind_from(a.backbone),
                            .layers = a.layers,
                            .in_dim = data.feature_dim,
                            .hidden_dim = a.hidden};
    PretrainConfig cfg{.method = pretrain_method_from(a.method),
                       .temperature = a.temperature,
                       .epochs = a.epochs,
                       .batch_size = a.batch_size,
                       .lr = a.lr,
                       .eta = a.eta,
                       .seed = a.seed};
    PretrainResult result = pretrain(data, backbone, cfg);
    save_ckpt(result.checkpoint, a.out);
    write_loss_csv(a.out + ".loss.csv", result.epoch_loss);
    double first = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.front();
    double last = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
    std::printf("wrote %s (+.loss.csv): method=%s epochs=%zu loss %g -> %g\n", a.out.c_str(),
                a.method.c_str(), a.epochs, first, last);
    return 0;
}

struct TuneArgs {
    std::string data, ckpt, out, mode = "gsst", scenario, adapter = "", head = "", seeds = "0,1,2,3,4";
    std::string backbone = "gcn";
    std::size_t layers = 2, hidden = 100, side_hidden = 16, epochs = 200, patience = 20, knn_k = 8;
    double lr = 0.01, edge_holdout = 0.1, alpha_init = 0.0;
    std::uint64_t adapter_seed = 0, split_seed = 0;
    bool deterministic = false;
    bool no_tune = false;  // direct inference without tuning
};

HeadKind head_kind_from(const std::string& s) {
    if (s == "graph_cls") return HeadKind::GraphCls;
    if (s == "node_cls") return HeadKind::NodeCls;
    if (s == "edge_pred") return HeadKind::EdgePred;
    if (s == "ptcld_cls") return HeadKind::PtcldCls;
    throw ConfigError("unknown head kind: " + s);
}

int run_tune(const TuneArgs& a) {
    ScenarioConfig cfg = ScenarioConfig::for_scenario(scenario_from(a.scenario));
    cfg.mode = tune_mode_from(a.mode);
    cfg.ckpt_path = a.ckpt;
    cfg.data_path = a.data;
    if (!a.adapter.empty()) cfg.adapter = adapter_kind_from(a.adapter);
    if (!a.head.empty()) cfg.head_kind = head_kind_from(a.head);
    cfg.adapter_seed = a.adapter_seed;
    cfg.side_hidden = a.side_hidden;
    cfg.alpha_init_raw = a.alpha_init;
    cfg.lr = a.lr;
    cfg.epochs = a.no_tune ? 0 : a.epochs;
    cfg.patience = a.patience;
    cfg.seeds = parse_seed_list(a.seeds);
    cfg.edge_holdout = a.edge_holdout;
    cfg.knn_k = a.knn_k;
    cfg.split_seed = a.split_seed;
    cfg.deterministic = a.deterministic;
    cfg.scratch_kind = backbone_kind_from(a.backbone);
    cfg.scratch_layers = a.layers;
    cfg.scratch_hidden = a.hidden;
    cfg.validate();

    GraphSet data = load_container(a.data);
    Checkpoint ckpt;
    const Checkpoint* ckpt_ptr = nullptr;
    if (cfg.mode != TuneMode::Scratch) {
        ckpt = load_ckpt(a.ckpt);
        ckpt_ptr = &ckpt;
    }
    Report rep = run_scenario(cfg, data, ckpt_ptr);
    write_text_file(a.out, report_json(rep).dump() + "\n");
    std::printf("wrote %s: scenario=%s mode=%s %s=%.4f +/- %.4f (%zu seeds, %zu tunables)\n",
                a.out.c_str(), scenario_name(cfg.scenario).c_str(), tune_mode_name(cfg.mode).c_str(),
                metric_name(scenario_metric(cfg.scenario)).c_str(), rep.mean_test, rep.std_test,
                cfg.seeds.size(), rep.tunable_params);
    return 0;
}

struct ParamsArgs {
    std::string out;
    std::size_t layers = 5, in_dim = 500, hidden = 100, side_hidden = 16;
    std::int64_t classes = 7;
    bool no_enforce = false;
};

int run_params(const ParamsArgs& a) {
    AuditOptions opt;
    opt.layers = a.layers;
    opt.in_dim = a.in_dim;
    opt.hidden_dim = a.hidden;
    opt.side_hidden = a.side_hidden;
    opt.num_classes = a.classes;
    opt.enforce = !a.no_enforce;
    AuditTable table = audit_params(opt);
    write_text_file(a.out, table.to_json().dump() + "\n");
    write_text_file(a.out + ".csv", table.to_csv());
    for (const auto& r : table.rows)
        std::printf("%-8s %-4s tunable=%-9zu fraction_vs_ft=%.4f\n", r.mode.c_str(), r.backbone.c_str(),
                    r.tunable, r.fraction_vs_ft);
    std::printf("wrote %s and %s.csv\n", a.out.c_str(), a.out.c_str());
    return 0;
}

struct GradcheckArgs {
    std::string out;
    double tol = 1e-4;
    std::size_t hidden = 24;
    std::uint64_t seed = 0;
};

int run_gradcheck(const GradcheckArgs& a) {
    auto rows = gradient_suite(a.tol, a.hidden, a.seed);
    bool all = true;
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        std::printf("%s %-8s %-4s worst_rel_err=%.3e\n", r.pass ? "PASS" : "FAIL", r.mode.c_str(),
                    r.backbone.c_str(), r.worst_rel_err);
        all = all && r.pass;
        j.push_back({{"mode", r.mode}, {"backbone", r.backbone}, {"pass", r.pass},
                     {"worst_rel_err", r.worst_rel_err}});
    }
    if (!a.out.empty()) write_text_file(a.out, j.dump() + "\n");
    if (!all) throw NumericError("gradient suite failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graphbridge: pre-train GNN backbones and side-tune them across task levels"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset container");
    synth->add_option("--kind", synth_args.kind, "sbm|mol|ptcld")->required();
    synth->add_option("--out", synth_args.out)->required();
    synth->add_option("--seed", synth_args.seed);
    synth->add_option("--blocks", synth_args.blocks, "sbm block sizes, e.g. 30,30");
    synth->add_option("--p-in", synth_args.p_in);
    synth->add_option("--p-out", synth_args.p_out);
    synth->add_option("--noise", synth_args.noise);
    synth->add_option("--feature-dim", synth_args.feature_dim);
    synth->add_option("--count", synth_args.count);
    synth->add_option("--min-nodes", synth_args.min_nodes);
    synth->add_option("--max-nodes", synth_args.max_nodes);
    synth->add_option("--points", synth_args.points);
    synth->add_option("--classes", synth_args.classes);
    synth->add_flag("--with-splits", synth_args.with_splits, "bake 60/20/20 splits");
    synth->add_option("--split-seed", synth_args.split_seed);

    ConvertArgs convert_args;
    auto* convert = app.add_subcommand("convert", "build a container from CSV edge/feature/label files");
    convert->add_option("--edges", convert_args.edges)->required();
    convert->add_option("--features", convert_args.features)->required();
    convert->add_option("--labels", convert_args.labels)->required();
    convert->add_option("--kind", convert_args.kind, "node_task|graph_task|edge_task");
    convert->add_flag("--directed", convert_args.directed, "skip symmetrization");
    convert->add_option("--out", convert_args.out)->required();

    PretrainArgs pre_args;
    auto* pre = app.add_subcommand("pretrain", "contrastive pre-training of a backbone");
    pre->add_option("--data", pre_args.data)->required();
    pre->add_option("--out", pre_args.out)->required();
    pre->add_option("--method", pre_args.method, "graphcl|simgrace");
    pre->add_option("--backbone", pre_args.backbone, "gcn|gat|gin");
    pre->add_option("--layers", pre_args.layers);
    pre->add_option("--hidden", pre_args.hidden);
    pre->add_option("--epochs", pre_args.epochs);
    pre->add_option("--batch-size", pre_args.batch_size);
    pre->add_option("--lr", pre_args.lr);
    pre->add_option("--temperature", pre_args.temperature);
    pre->add_option("--eta", pre_args.eta);
    pre->add_option("--seed", pre_args.seed);
    pre->add_option("--chunk-size", pre_args.chunk_size);
    pre->add_option("--chunk-count", pre_args.chunk_count);
    pre->add_flag("--deterministic", pre_args.deterministic);

    TuneArgs tune_args;
    auto* tune_cmd = app.add_subcommand("tune", "side-tune / fine-tune / scratch-train on a scenario");
    tune_cmd->add_option("--data", tune_args.data)->required();
    tune_cmd->add_option("--ckpt", tune_args.ckpt);
    tune_cmd->add_option("--out", tune_args.out)->required();
    tune_cmd->add_option("--mode", tune_args.mode, "gbst|gast|gsst|gmst|ft|scratch");
    tune_cmd
        ->add_option("--scenario", tune_args.scenario,
                     "graph2graph|node2node|graph2node|node2graph|graph2edge|graph2ptcld")
        ->required();
    tune_cmd->add_option("--adapter", tune_args.adapter,
                         "identity|pad_truncate|rand_project|linear_trainable");
    tune_cmd->add_option("--head", tune_args.head, "override head kind (validated against the scenario)");
    tune_cmd->add_option("--adapter-seed", tune_args.adapter_seed);
    tune_cmd->add_option("--side-hidden", tune_args.side_hidden);
    tune_cmd->add_option("--alpha-init", tune_args.alpha_init);
    tune_cmd->add_option("--lr", tune_args.lr);
    tune_cmd->add_option("--epochs", tune_args.epochs);
    tune_cmd->add_option("--patience", tune_args.patience);
    tune_cmd->add_option("--seeds", tune_args.seeds, "comma list, e.g. 0,1,2,3,4");
    tune_cmd->add_option("--edge-holdout", tune_args.edge_holdout);
    tune_cmd->add_option("--knn-k", tune_args.knn_k);
    tune_cmd->add_option("--split-seed", tune_args.split_seed);
    tune_cmd->add_option("--backbone", tune_args.backbone, "scratch backbone kind");
    tune_cmd->add_option("--layers", tune_args.layers, "scratch backbone layers");
    tune_cmd->add_option("--hidden", tune_args.hidden, "scratch backbone hidden width");
    tune_cmd->add_flag("--deterministic", tune_args.deterministic);

    TuneArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "direct inference without tuning (init metrics)");
    eval_cmd->add_option("--data", eval_args.data)->required();
    eval_cmd->add_option("--ckpt", eval_args.ckpt);
    eval_cmd->add_option("--out", eval_args.out)->required();
    eval_cmd->add_option("--mode", eval_args.mode);
    eval_cmd->add_option("--scenario", eval_args.scenario)->required();
    eval_cmd->add_option("--adapter", eval_args.adapter);
    eval_cmd->add_option("--adapter-seed", eval_args.adapter_seed);
    eval_cmd->add_option("--side-hidden", eval_args.side_hidden);
    eval_cmd->add_option("--seeds", eval_args.seeds);
    eval_cmd->add_option("--edge-holdout", eval_args.edge_holdout);
    eval_cmd->add_option("--knn-k", eval_args.knn_k);
    eval_cmd->add_option("--split-seed", eval_args.split_seed);
    eval_cmd->add_option("--backbone", eval_args.backbone);
    eval_cmd->add_option("--layers", eval_args.layers);
    eval_cmd->add_option("--hidden", eval_args.hidden);
    eval_cmd->add_flag("--deterministic", eval_args.deterministic);

    ParamsArgs params_args;
    auto* params_cmd = app.add_subcommand("params", "parameter-size audit across modes and backbones");
    params_cmd->add_option("--out", params_args.out)->required();
    params_cmd->add_option("--layers", params_args.layers);
    params_cmd->add_option("--in-dim", params_args.in_dim);
    params_cmd->add_option("--hidden", params_args.hidden);
    params_cmd->add_option("--side-hidden", params_args.side_hidden);
    params_cmd->add_option("--classes", params_args.classes);
    params_cmd->add_flag("--no-enforce", params_args.no_enforce, "emit the table without asserting claims");

    GradcheckArgs grad_args;
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    grad_cmd->add_option("--tol", grad_args.tol);
    grad_cmd->add_option("--hidden", grad_args.hidden);
    grad_cmd->add_option("--seed", grad_args.seed);
    grad_cmd->add_option("--out", grad_args.out);

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return run_synth(synth_args);
        if (convert->parsed()) return run_convert(convert_args);
        if (pre->parsed()) return run_pretrain(pre_args);
        if (tune_cmd->parsed()) return run_tune(tune_args);
        if (eval_cmd->parsed()) {
            eval_args.no_tune = true;
            return run_tune(eval_args);
        }
        if (params_cmd->parsed()) return run_params(params_args);
        if (grad_cmd->parsed()) return run_gradcheck(grad_args);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}
