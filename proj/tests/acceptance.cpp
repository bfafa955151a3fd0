// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code is nonzero when any criterion
// fails. Criterion 7 needs a user-supplied Cora container (GRAPHBRIDGE_CORA
// or ./data/cora.json) and reports SKIP when absent.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <graphbridge/graphbridge.hpp>

using namespace graphbridge;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++failures;
}

void report_skip(int criterion, const std::string& detail) {
    std::printf("[SKIP] criterion %2d: %s\n", criterion, detail.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Tensor> values_of(const ParamList& params) {
    std::vector<Tensor> v;
    v.reserve(params.size());
    for (const auto& p : params) v.push_back(p.value);
    return v;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Graph random_graph(std::size_t n, double p, std::size_t dim, Rng& rng) {
    Graph g;
    g.num_nodes = n;
    g.adj.num_nodes = n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < p) {
                g.adj.edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
                g.adj.edges.emplace_back(static_cast<std::int64_t>(j), static_cast<std::int64_t>(i));
            }
    std::sort(g.adj.edges.begin(), g.adj.edges.end());
    g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);
    std::vector<double> feats(n * dim);
    for (double& v : feats) v = rng.uniform(-1.0, 1.0);
    g.features = Tensor({n, dim}, std::move(feats));
    return g;
}

// --------------------------------------------------------------------------

void criterion_1_gradient_suite() {
    auto t0 = std::chrono::steady_clock::now();
    auto rows = gradient_suite(1e-4, 24, 0);
    double secs = seconds_since(t0);
    std::size_t passed = 0;
    double worst = 0.0;
    for (const auto& r : rows) {
        passed += r.pass ? 1 : 0;
        worst = std::max(worst, r.worst_rel_err);
    }
    bool ok = passed == rows.size() && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "gradient suite: %zu/%zu mode x backbone combos pass at tol 1e-4 "
                  "(worst %.2e), %.1fs < 120s",
                  passed, rows.size(), worst, secs);
    report(1, ok, buf);
}

void criterion_2_reduction_equivalence() {
    Rng rng(2024);
    double worst_reduction = 0.0, worst_degenerate = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        BackboneKind kind = static_cast<BackboneKind>(rng.below(3));
        std::size_t layers = 1 + rng.below(3);
        std::size_t in_dim = 3 + rng.below(5);
        std::size_t hidden = 4 + rng.below(6);
        std::size_t side = 3 + rng.below(4);
        Checkpoint ck = Checkpoint::fresh(
            {.kind = kind, .layers = layers, .in_dim = in_dim, .hidden_dim = hidden}, 3000 + trial);
        Graph g = random_graph(5 + rng.below(8), 0.4, in_dim, rng);
        GraphContext ctx = GraphContext::make(g.adj);
        AdapterSpec ident{AdapterKind::Identity, in_dim, in_dim};
        HeadSpec head{HeadKind::NodeCls, side, 2};
        std::uint64_t seed = 400 + trial;

        SideTuneModel gsst = build_sidetune({.mode = TuneMode::GSST, .side_hidden = side, .seed = seed},
                                            &ck, ck.config, ident, head);
        SideTuneModel gmst = build_sidetune({.mode = TuneMode::GMST, .side_hidden = side, .seed = seed},
                                            &ck, ck.config, ident, head);
        for (int idx : gmst.alpha_b_idx) gmst.trainable[static_cast<std::size_t>(idx)].value = Tensor::scalar(40.0);
        Tensor za = sidetune_repr(gsst, values_of(gsst.trainable), ctx, g.features);
        Tensor zb = sidetune_repr(gmst, values_of(gmst.trainable), ctx, g.features);
        worst_reduction = std::max(worst_reduction, max_abs_diff(za, zb));

        // degenerate depth: single fusion point coincides with layer-wise fusion
        Checkpoint ck1 = Checkpoint::fresh(
            {.kind = kind, .layers = 1, .in_dim = in_dim, .hidden_dim = hidden}, 5000 + trial);
        for (auto [simple, full] : {std::pair{TuneMode::GBST, TuneMode::GSST},
                                    std::pair{TuneMode::GAST, TuneMode::GMST}}) {
            SideTuneModel m1 = build_sidetune({.mode = simple, .side_hidden = side, .seed = seed}, &ck1,
                                              ck1.config, ident, head);
            SideTuneModel m2 = build_sidetune({.mode = full, .side_hidden = side, .seed = seed}, &ck1,
                                              ck1.config, ident, head);
            Tensor z1 = sidetune_repr(m1, values_of(m1.trainable), ctx, g.features);
            Tensor z2 = sidetune_repr(m2, values_of(m2.trainable), ctx, g.features);
            worst_degenerate = std::max(worst_degenerate, max_abs_diff(z1, z2));
        }
    }
    bool ok = worst_reduction <= 1e-12 && worst_degenerate <= 1e-12;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "reduction equivalence over 50 pairs: saturated gmst==gsst (max %.2e), "
                  "L=1 gbst==gsst and gast==gmst (max %.2e), both <= 1e-12",
                  worst_reduction, worst_degenerate);
    report(2, ok, buf);
}

void criterion_3_freezing() {
    GraphSet sbm = make_splits(synth_sbm({.block_sizes = {15, 15}, .p_in = 0.5, .p_out = 0.06}, 8),
                               {0.6, 0.2, 0.2}, 4);
    TaskData data = make_task_data(sbm);
    Checkpoint ck = Checkpoint::fresh(
        {.kind = BackboneKind::GCN, .layers = 2, .in_dim = sbm.feature_dim, .hidden_dim = 12}, 6);
    bool ok = true;
    std::string failed_mode;
    for (TuneMode mode : {TuneMode::GBST, TuneMode::GAST, TuneMode::GSST, TuneMode::GMST}) {
        SideTuneConfig cfg{.mode = mode, .side_hidden = 8, .lr = 0.02, .epochs = 100, .patience = 1000,
                           .seed = 12};
        SideTuneModel model = build_sidetune(cfg, &ck, ck.config,
                                             {AdapterKind::Identity, sbm.feature_dim, sbm.feature_dim},
                                             {HeadKind::NodeCls, 8, sbm.num_classes});
        std::vector<std::vector<double>> base_before, backup_before;
        for (const auto& p : model.base) base_before.push_back(p.value.data());
        for (const auto& p : model.backup) backup_before.push_back(p.value.data());
        TrainReport rep = tune(model, data, cfg, Metric::Accuracy);
        bool frozen = rep.epochs_run == 100;
        for (std::size_t i = 0; i < base_before.size(); ++i)
            frozen = frozen && base_before[i] == model.base[i].value.data();
        for (std::size_t i = 0; i < backup_before.size(); ++i)
            frozen = frozen && backup_before[i] == model.backup[i].value.data();
        if (!frozen) {
            ok = false;
            failed_mode = tune_mode_name(mode);
        }
    }
    report(3, ok,
           ok ? "freezing: base and backup bytes unchanged after 100 steps in gbst/gast/gsst/gmst"
              : "freezing violated in mode " + failed_mode);
}

void criterion_4_parameter_audit() {
    AuditOptions opt;  // five-layer defaults
    bool ok = true;
    std::string detail;
    try {
        AuditTable table = audit_params(opt);
        std::size_t gsst_ref = 0;
        double gin_gsst_fraction = 0.0, worst_fraction = 0.0;
        for (const auto& r : table.rows) {
            if (r.mode == "gsst") {
                if (gsst_ref == 0) gsst_ref = r.tunable;
                ok = ok && r.tunable == gsst_ref;
            }
            if (r.mode == "gsst" || r.mode == "gmst") {
                worst_fraction = std::max(worst_fraction, r.fraction_vs_ft);
                ok = ok && r.fraction_vs_ft <= 0.20;
                if (r.backbone == "gin" && r.mode == "gsst") gin_gsst_fraction = r.fraction_vs_ft;
            }
        }
        ok = ok && gin_gsst_fraction <= 0.05 + 0.02;
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "parameter audit (5-layer, in=500): gsst counts equal across backbones (%zu), "
                      "worst side fraction %.4f <= 0.20, gin fraction %.4f <= 0.07",
                      gsst_ref, worst_fraction, gin_gsst_fraction);
        detail = buf;
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("parameter audit threw: ") + e.what();
    }
    report(4, ok, detail);
}

void criterion_5_auc_oracle() {
    Rng rng(555);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng.below(49);
        std::vector<double> scores(n);
        std::vector<std::int64_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.below(10)) / 5.0;  // coarse grid forces ties
            labels[i] = static_cast<std::int64_t>(rng.below(2));
        }
        bool has_pos = false, has_neg = false;
        for (std::int64_t l : labels) {
            has_pos = has_pos || l == 1;
            has_neg = has_neg || l == 0;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[n - 1] = 0;

        std::uint64_t numer2 = 0, pos = 0, neg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != 1) continue;
            ++pos;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                if (scores[i] > scores[j]) numer2 += 2;
                else if (scores[i] == scores[j]) numer2 += 1;
            }
        }
        for (std::int64_t l : labels) neg += l == 0 ? 1 : 0;
        double brute = static_cast<double>(numer2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
        if (roc_auc(scores, labels) != brute) ++mismatches;
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "ROC-AUC equals brute-force pair counting exactly on %d/1000 vectors",
                  1000 - static_cast<int>(mismatches));
    report(5, mismatches == 0, buf);
}

void criterion_6_permutation_invariance() {
    Rng rng(66);
    double worst = 0.0;
    for (BackboneKind kind : {BackboneKind::GCN, BackboneKind::GIN}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::size_t n = 5 + rng.below(8);
            std::size_t dim = 4;
            Graph g = random_graph(n, 0.4, dim, rng);
            BackboneConfig cfg{.kind = kind, .layers = 2, .in_dim = dim, .hidden_dim = 8};
            ParamList params = init_backbone(cfg, 700 + static_cast<std::uint64_t>(trial));
            Rng head_rng(900 + static_cast<std::uint64_t>(trial));
            Tensor hw = glorot(8, 3, head_rng);
            Tensor hb = zero_bias(3);

            std::vector<std::size_t> perm(n);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            rng.shuffle(perm);
            Graph pg;
            pg.num_nodes = n;
            pg.adj.num_nodes = n;
            std::vector<double> pfeats(n * dim);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < dim; ++c) pfeats[perm[i] * dim + c] = g.features.at(i, c);
            pg.features = Tensor({n, dim}, std::move(pfeats));
            for (const auto& [s, d] : g.adj.edges)
                pg.adj.edges.emplace_back(static_cast<std::int64_t>(perm[static_cast<std::size_t>(s)]),
                                          static_cast<std::int64_t>(perm[static_cast<std::size_t>(d)]));
            std::sort(pg.adj.edges.begin(), pg.adj.edges.end());
            pg.adj.edge_weights.assign(pg.adj.edges.size(), 1.0);

            auto pooled_logits = [&](const Graph& graph) {
                auto acts = backbone_forward(cfg, values_of(params), GraphContext::make(graph.adj),
                                             graph.features, false);
                std::vector<std::int64_t> gid(graph.num_nodes, 0);
                Tensor pooled = segment_mean_rows(acts.final, gid, 1);
                return add(matmul(pooled, hw), hb);
            };
            worst = std::max(worst, max_abs_diff(pooled_logits(g), pooled_logits(pg)));
        }
    }
    char buf[140];
    std::snprintf(buf, sizeof(buf),
                  "pooled graph-head outputs invariant under relabeling for gcn/gin on 100 graphs "
                  "(max dev %.2e <= 1e-9)",
                  worst);
    report(6, worst <= 1e-9, buf);
}

void criterion_7_cora() {
    std::string path;
    if (const char* env = std::getenv("GRAPHBRIDGE_CORA")) path = env;
    if (path.empty() && std::filesystem::exists("data/cora.json")) path = "data/cora.json";
    if (path.empty() && std::filesystem::exists("../data/cora.json")) path = "../data/cora.json";
    if (path.empty()) {
        report_skip(7, "Cora reproduction: no container supplied (set GRAPHBRIDGE_CORA or data/cora.json)");
        return;
    }
    auto t0 = std::chrono::steady_clock::now();
    GraphSet cora = load_container(path);
    ScenarioConfig cfg = ScenarioConfig::for_scenario(Scenario::Node2Node);
    cfg.mode = TuneMode::Scratch;
    cfg.scratch_kind = BackboneKind::GCN;
    cfg.scratch_layers = 2;
    cfg.scratch_hidden = 100;
    cfg.epochs = 200;
    cfg.lr = 0.01;
    cfg.seeds = {0};
    cfg.data_path = path;
    Report rep = run_scenario(cfg, cora, nullptr);
    double secs = seconds_since(t0);
    double acc = rep.runs[0].test_metric;
    bool ok = acc >= 0.70 && secs < 300.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "Cora scratch 2-layer GCN: test accuracy %.4f >= 0.70 within 200 epochs, %.0fs < 300s",
                  acc, secs);
    report(7, ok, buf);
}

void criterion_8_synthetic_pipeline() {
    auto t0 = std::chrono::steady_clock::now();
    GraphSet pre_corpus = synth_mol({.count = 80, .min_nodes = 5, .max_nodes = 12}, 100);
    BackboneConfig backbone{.kind = BackboneKind::GCN, .layers = 2, .hidden_dim = 32};
    PretrainConfig pre_cfg{.method = PretrainMethod::GraphCL, .epochs = 20, .batch_size = 16,
                           .lr = 3e-3, .seed = 100};
    PretrainResult pre = pretrain(pre_corpus, backbone, pre_cfg);
    bool descent = pre.epoch_loss.size() == 20 && pre.epoch_loss.back() < pre.epoch_loss.front();

    // 200 graphs leave 40 in the test split; the label-permutation null then
    // has sigma ~ 0.09, so 0.5 + 3*sigma is a reachable bar
    GraphSet down = make_splits(synth_mol({.count = 200, .min_nodes = 5, .max_nodes = 12}, 200),
                                {0.6, 0.2, 0.2}, 5);
    TaskData data = make_task_data(down);
    std::vector<double> aucs;
    double max_null_sigma = 0.0;
    Rng null_rng(808);
    for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
        SideTuneConfig cfg{.mode = TuneMode::GSST, .side_hidden = 16, .lr = 0.02, .epochs = 60,
                           .patience = 30, .seed = seed};
        SideTuneModel model = build_sidetune(cfg, &pre.checkpoint, pre.checkpoint.config,
                                             {AdapterKind::Identity, down.feature_dim, down.feature_dim},
                                             {HeadKind::GraphCls, 16, down.num_classes});
        tune(model, data, cfg, Metric::RocAuc);

        // final-model scores on the test split drive both the statistic and its null
        Tensor logits = row_select(task_logits(model, values_of(model.trainable), data, nullptr),
                                   data.splits.test);
        std::vector<double> scores;
        for (std::size_t i = 0; i < logits.rows(); ++i) scores.push_back(logits.at(i, 1) - logits.at(i, 0));
        std::vector<std::int64_t> labels;
        for (std::int64_t idx : data.splits.test) labels.push_back(data.labels[static_cast<std::size_t>(idx)]);
        aucs.push_back(roc_auc(scores, labels));

        double sum = 0.0, sumsq = 0.0;
        const int kPerms = 200;
        std::vector<std::int64_t> shuffled = labels;
        for (int p = 0; p < kPerms; ++p) {
            null_rng.shuffle(shuffled);
            bool pos = false, neg = false;
            for (std::int64_t l : shuffled) {
                pos = pos || l == 1;
                neg = neg || l == 0;
            }
            if (!pos || !neg) continue;
            double a = roc_auc(scores, shuffled);
            sum += a;
            sumsq += a * a;
        }
        double mean = sum / kPerms;
        max_null_sigma = std::max(max_null_sigma, std::sqrt(std::max(0.0, sumsq / kPerms - mean * mean)));
    }
    double mean_auc = 0.0;
    for (double a : aucs) mean_auc += a;
    mean_auc /= static_cast<double>(aucs.size());
    double threshold = 0.5 + 3.0 * max_null_sigma;
    bool ok = descent && mean_auc > threshold;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "synthetic pipeline: NT-Xent %.4f -> %.4f (descent %s), mean test AUC %.4f > "
                  "0.5+3*sigma_null=%.4f over 5 seeds, %.0fs",
                  pre.epoch_loss.front(), pre.epoch_loss.back(), descent ? "yes" : "NO", mean_auc,
                  threshold, seconds_since(t0));
    report(8, ok, buf);
}

void criterion_9_comparison_report() {
    GraphSet down = synth_mol({.count = 50, .min_nodes = 5, .max_nodes = 12}, 300);
    GraphSet pre_corpus = synth_mol({.count = 60, .min_nodes = 5, .max_nodes = 12}, 301);
    BackboneConfig backbone{.kind = BackboneKind::GCN, .layers = 2, .hidden_dim = 32};
    PretrainResult pre = pretrain(pre_corpus, backbone,
                                  {.method = PretrainMethod::GraphCL, .epochs = 8, .batch_size = 16,
                                   .lr = 3e-3, .seed = 42});

    auto run_mode = [&](TuneMode mode) {
        ScenarioConfig cfg = ScenarioConfig::for_scenario(Scenario::Graph2Graph);
        cfg.mode = mode;
        cfg.side_hidden = 16;
        cfg.lr = 0.02;
        cfg.epochs = 40;
        cfg.seeds = {0, 1, 2};
        cfg.ckpt_path = "synthetic";
        cfg.data_path = "synth mol seed 300";
        cfg.adapter = AdapterKind::Identity;
        cfg.scratch_hidden = 32;
        return run_scenario(cfg, down, mode == TuneMode::Scratch ? nullptr : &pre.checkpoint);
    };

    auto build_comparison = [&] {
        Report gsst = run_mode(TuneMode::GSST);
        Report gmst = run_mode(TuneMode::GMST);
        Report scratch = run_mode(TuneMode::Scratch);
        nlohmann::json j;
        j["statement"] =
            "full-scale public-benchmark numbers are out of desk-scale reach; this seeded synthetic "
            "comparison plus the other criteria stand in for them";
        j["gsst"] = report_json(gsst);
        j["gmst"] = report_json(gmst);
        j["scratch"] = report_json(scratch);
        j["speedup_pct"] = {{"gsst_vs_scratch", speedup(gsst, scratch)},
                            {"gmst_vs_scratch", speedup(gmst, scratch)}};
        return j;
    };

    nlohmann::json first = build_comparison();
    nlohmann::json second = build_comparison();
    write_text_file("gsst_vs_gmst_report.json", first.dump() + "\n");
    mask_timing(first);
    mask_timing(second);
    bool deterministic = first.dump() == second.dump();
    bool has_all = first.contains("gsst") && first.contains("gmst") && first.contains("scratch");
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "GSST-vs-GMST comparison report emitted (gsst_vs_gmst_report.json, gsst %.3f, "
                  "gmst %.3f, no ordering asserted) and deterministic: %s",
                  first["gsst"]["aggregate"]["mean_test"].get<double>(),
                  first["gmst"]["aggregate"]["mean_test"].get<double>(), deterministic ? "yes" : "NO");
    report(9, deterministic && has_all, buf);
}

void criterion_10_determinism() {
    GraphSet corpus = synth_mol({.count = 40, .min_nodes = 5, .max_nodes = 10}, 77);
    BackboneConfig backbone{.kind = BackboneKind::GIN, .layers = 2, .hidden_dim = 16};
    PretrainConfig pcfg{.method = PretrainMethod::SimGRACE, .epochs = 5, .batch_size = 16, .seed = 9};
    PretrainResult p1 = pretrain(corpus, backbone, pcfg);
    PretrainResult p2 = pretrain(corpus, backbone, pcfg);
    nlohmann::json c1 = nlohmann::json::object(), c2 = nlohmann::json::object();
    for (const auto& p : p1.checkpoint.params) c1[p.name] = p.value.data();
    for (const auto& p : p2.checkpoint.params) c2[p.name] = p.value.data();
    bool ckpt_same = c1.dump() == c2.dump();

    GraphSet down = synth_sbm({.block_sizes = {14, 14}, .p_in = 0.5, .p_out = 0.05}, 31);
    ScenarioConfig cfg = ScenarioConfig::for_scenario(Scenario::Node2Node);
    cfg.mode = TuneMode::GSST;
    cfg.side_hidden = 8;
    cfg.epochs = 25;
    cfg.seeds = {0, 1};
    cfg.ckpt_path = "mem";
    cfg.data_path = "synth sbm seed 31";
    cfg.deterministic = true;
    Checkpoint node_ck = Checkpoint::fresh(
        {.kind = BackboneKind::GCN, .layers = 2, .in_dim = down.feature_dim, .hidden_dim = 16}, 3);
    nlohmann::json r1 = report_json(run_scenario(cfg, down, &node_ck));
    nlohmann::json r2 = report_json(run_scenario(cfg, down, &node_ck));
    mask_timing(r1);
    mask_timing(r2);
    bool report_same = r1.dump() == r2.dump();
    report(10, ckpt_same && report_same,
           std::string("determinism: repeated pretrain checkpoints byte-identical (") +
               (ckpt_same ? "yes" : "NO") + "), repeated scenario reports byte-identical after "
               "masking timing (" + (report_same ? "yes" : "NO") + ")");
}

}  // namespace

int main() {
    std::printf("graphbridge acceptance suite\n");
    auto t0 = std::chrono::steady_clock::now();
    criterion_1_gradient_suite();
    criterion_2_reduction_equivalence();
    criterion_3_freezing();
    criterion_4_parameter_audit();
    criterion_5_auc_oracle();
    criterion_6_permutation_invariance();
    criterion_7_cora();
    criterion_8_synthetic_pipeline();
    criterion_9_comparison_report();
    criterion_10_determinism();
    std::printf("%d criterion(s) failed, total %.1fs\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
