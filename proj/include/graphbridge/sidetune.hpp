#pragma once

// The four graph side-tuning architectures plus full fine-tune and scratch
// baselines.
//
//   gsst: z_0 = x; s_i = side_i(z_{i-1}); z_i = blend(alpha_s[i], down_i(b_i), s_i)
//   gmst: gsst with b_i replaced by the per-layer base merge
//         Phi_b,i = blend(alpha_b[i], pretrained b_i, backup b_i)
//   gbst: the side MLP runs independently on x; one final blend of
//         down_L(b_L) with the side output
//   gast: gbst with the base merge supplying the base signal
//
// The pretrained and backup towers propagate independently and stay frozen;
// merged activations feed the side path only. Alphas are sigmoid-squashed raw
// scalars, so every blend stays a convex combination.

#include <chrono>
#include <string>
#include <vector>

#include "graphbridge/backbone.hpp"
#include "graphbridge/bridges.hpp"
#include "graphbridge/checkpoint.hpp"
#include "graphbridge/graph.hpp"
#include "graphbridge/metrics.hpp"
#include "graphbridge/optim.hpp"

namespace graphbridge {

enum class TuneMode { GBST, GAST, GSST, GMST, FT, Scratch };

inline std::string tune_mode_name(TuneMode m) {
    switch (m) {
        case TuneMode::GBST: return "gbst";
        case TuneMode::GAST: return "gast";
        case TuneMode::GSST: return "gsst";
        case TuneMode::GMST: return "gmst";
        case TuneMode::FT: return "ft";
        case TuneMode::Scratch: return "scratch";
    }
    throw std::logic_error("bad TuneMode");
}

inline TuneMode tune_mode_from(const std::string& s) {
    if (s == "gbst") return TuneMode::GBST;
    if (s == "gast") return TuneMode::GAST;
    if (s == "gsst") return TuneMode::GSST;
    if (s == "gmst") return TuneMode::GMST;
    if (s == "ft") return TuneMode::FT;
    if (s == "scratch") return TuneMode::Scratch;
    throw ConfigError("unknown tuning mode: " + s);
}

inline bool is_side_mode(TuneMode m) {
    return m == TuneMode::GBST || m == TuneMode::GAST || m == TuneMode::GSST || m == TuneMode::GMST;
}
inline bool mode_needs_backup(TuneMode m) { return m == TuneMode::GAST || m == TuneMode::GMST; }
inline bool mode_layerwise_fusion(TuneMode m) { return m == TuneMode::GSST || m == TuneMode::GMST; }

struct SideTuneConfig {
    TuneMode mode = TuneMode::GSST;
    std::size_t side_hidden = 16;
    double alpha_init_raw = 0.0;
    double lr = 0.01;
    std::size_t epochs = 200;
    std::size_t patience = 20;
    std::uint64_t seed = 0;

    void validate() const {
        if (side_hidden < 1) throw ConfigError("side-tune: side_hidden must be >= 1");
        if (lr <= 0.0) throw ConfigError("side-tune: learning rate must be positive");
    }
};

// Trainable layout, in construction order: [adapter] [side layers]
// [downsamplers] [alpha_s...] [alpha_b...] [head]; ft/scratch instead carry
// [adapter] [backbone] [head].
struct SideTuneModel {
    TuneMode mode = TuneMode::GSST;
    BackboneConfig backbone;
    ParamList base;       // frozen pretrained tower (side modes)
    ParamList backup;     // frozen random twin (gast/gmst)
    ParamList trainable;
    AdapterSpec adapter;
    HeadSpec head;
    std::size_t side_hidden = 16;

    // indices into `trainable`
    int adapter_w = -1, adapter_b = -1;
    std::vector<int> side_w, side_b;
    std::vector<int> down_w, down_b;
    std::vector<int> alpha_s_idx;
    std::vector<int> alpha_b_idx;
    int head_w = -1, head_b = -1;
    int backbone_begin = -1;

    std::size_t count_tunables() const { return total_size(trainable); }
};

// Exact closed-form trainable count for a mode at the given dims.
inline std::size_t count_tunables_closed(TuneMode mode, const BackboneConfig& bc, std::size_t side_hidden,
                                         const HeadSpec& head, const AdapterSpec& adapter) {
    std::size_t total = 0;
    if (adapter.kind == AdapterKind::LinearTrainable) total += adapter.src_dim * adapter.dst_dim + adapter.dst_dim;
    CountExtras head_extras{.side_hidden = side_hidden,
                            .head_in = is_side_mode(mode) ? side_hidden : bc.hidden_dim,
                            .num_classes = static_cast<std::size_t>(head.num_classes),
                            .edge_head = head.kind == HeadKind::EdgePred};
    if (is_side_mode(mode)) {
        total += param_count(bc, ParamRole::Side, {.side_hidden = side_hidden});
        std::size_t downs = mode_layerwise_fusion(mode) ? bc.layers : 1;
        total += downs * (bc.hidden_dim * side_hidden + side_hidden);
        total += mode_layerwise_fusion(mode) ? bc.layers : 1;          // alpha_s
        if (mode_needs_backup(mode)) total += bc.layers;               // alpha_b
    } else {
        total += param_count(bc, ParamRole::Backbone);
    }
    total += param_count(bc, ParamRole::Head, head_extras);
    return total;
}

inline SideTuneModel build_sidetune(const SideTuneConfig& cfg, const Checkpoint* ckpt,
                                    BackboneConfig backbone_cfg, const AdapterSpec& adapter,
                                    HeadSpec head) {
    cfg.validate();
    if (cfg.mode != TuneMode::Scratch) {
        if (ckpt == nullptr) throw ConfigError("mode " + tune_mode_name(cfg.mode) + " needs a checkpoint");
        backbone_cfg = ckpt->config;
    }
    if (cfg.mode != TuneMode::Scratch && adapter.dst_dim != backbone_cfg.in_dim)
        throw ConfigError("adapter dst_dim " + std::to_string(adapter.dst_dim) +
                          " does not match checkpoint in_dim " + std::to_string(backbone_cfg.in_dim));
    backbone_cfg.validate();

    SideTuneModel model;
    model.mode = cfg.mode;
    model.backbone = backbone_cfg;
    model.adapter = adapter;
    model.side_hidden = cfg.side_hidden;
    head.in_dim = is_side_mode(cfg.mode) ? cfg.side_hidden : backbone_cfg.hidden_dim;
    head.validate();
    model.head = head;

    Rng rng(cfg.seed);
    auto push = [&](const std::string& name, Tensor value) {
        model.trainable.push_back({name, std::move(value)});
        return static_cast<int>(model.trainable.size() - 1);
    };

    if (adapter.kind == AdapterKind::LinearTrainable) {
        model.adapter_w = push("adapter.weight", glorot(adapter.src_dim, adapter.dst_dim, rng));
        model.adapter_b = push("adapter.bias", zero_bias(adapter.dst_dim));
    }

    std::size_t L = backbone_cfg.layers;
    if (is_side_mode(cfg.mode)) {
        model.base = ckpt->params;
        if (mode_needs_backup(cfg.mode)) {
            // independent stream so gsst/gmst share main-chain draws at equal seeds
            std::uint64_t backup_seed = Rng(cfg.seed).fork(0xbac0).next_u64();
            model.backup = init_backbone(backbone_cfg, backup_seed);
        }
        std::size_t s = cfg.side_hidden;
        for (std::size_t i = 0; i < L; ++i) {
            std::size_t in = i == 0 ? backbone_cfg.in_dim : s;
            model.side_w.push_back(push("side." + std::to_string(i) + ".weight", glorot(in, s, rng)));
            model.side_b.push_back(push("side." + std::to_string(i) + ".bias", zero_bias(s)));
        }
        std::size_t first_down = mode_layerwise_fusion(cfg.mode) ? 0 : L - 1;
        for (std::size_t i = first_down; i < L; ++i) {
            model.down_w.push_back(push("down." + std::to_string(i) + ".weight",
                                        glorot(backbone_cfg.hidden_dim, s, rng)));
            model.down_b.push_back(push("down." + std::to_string(i) + ".bias", zero_bias(s)));
        }
        std::size_t n_alpha_s = mode_layerwise_fusion(cfg.mode) ? L : 1;
        for (std::size_t i = 0; i < n_alpha_s; ++i)
            model.alpha_s_idx.push_back(
                push("alpha_s." + std::to_string(i), Tensor::scalar(cfg.alpha_init_raw)));
        if (mode_needs_backup(cfg.mode))
            for (std::size_t i = 0; i < L; ++i)
                model.alpha_b_idx.push_back(
                    push("alpha_b." + std::to_string(i), Tensor::scalar(cfg.alpha_init_raw)));
    } else {
        model.backbone_begin = static_cast<int>(model.trainable.size());
        ParamList body = cfg.mode == TuneMode::FT ? ckpt->params : init_backbone(backbone_cfg, rng.next_u64());
        for (auto& p : body) model.trainable.push_back(std::move(p));
    }

    if (model.head.kind != HeadKind::EdgePred) {
        model.head_w = push("head.weight", glorot(model.head.in_dim,
                                                  static_cast<std::size_t>(model.head.num_classes), rng));
        model.head_b = push("head.bias", zero_bias(static_cast<std::size_t>(model.head.num_classes)));
    }
    return model;
}

// Per-layer merge of the two frozen towers, gated by alpha_b (Phi_b).
inline std::vector<Tensor> base_merge(const std::vector<Tensor>& pre_acts,
                                      const std::vector<Tensor>& backup_acts,
                                      const std::vector<Tensor>& alpha_b_raw) {
    if (pre_acts.size() != backup_acts.size() || pre_acts.size() != alpha_b_raw.size())
        throw ShapeError("base_merge: tower layer counts differ (" + std::to_string(pre_acts.size()) +
                         " vs " + std::to_string(backup_acts.size()) + ")");
    std::vector<Tensor> merged;
    merged.reserve(pre_acts.size());
    for (std::size_t i = 0; i < pre_acts.size(); ++i)
        merged.push_back(blend(alpha_b_raw[i], pre_acts[i], backup_acts[i]));
    return merged;
}

// Frozen-tower activations. They depend only on the adapted input, so they
// can be cached across steps whenever the adapter is frozen.
struct TowerActs {
    std::vector<Tensor> base;
    std::vector<Tensor> backup;
};

inline TowerActs run_towers(const SideTuneModel& model, const GraphContext& ctx, const Tensor& x) {
    TowerActs acts;
    std::vector<Tensor> base_vals;
    for (const auto& p : model.base) base_vals.push_back(p.value);
    acts.base = backbone_forward(model.backbone, base_vals, ctx, x, true).layers;
    if (mode_needs_backup(model.mode)) {
        std::vector<Tensor> backup_vals;
        for (const auto& p : model.backup) backup_vals.push_back(p.value);
        acts.backup = backbone_forward(model.backbone, backup_vals, ctx, x, true).layers;
    }
    return acts;
}

// Fused representation z_L. `bound` must align with model.trainable (bind via
// tape.watch for training, or pass the raw values for evaluation). `towers`
// may be precomputed when the adapter is frozen; pass nullptr to recompute
// (required when the trainable adapter participates).
inline Tensor sidetune_repr(const SideTuneModel& model, const std::vector<Tensor>& bound,
                            const GraphContext& ctx, const Tensor& features,
                            const TowerActs* towers = nullptr) {
    Tensor x = features;
    if (model.adapter.kind == AdapterKind::LinearTrainable)
        x = input_adapt_linear(features, bound[static_cast<std::size_t>(model.adapter_w)],
                               bound[static_cast<std::size_t>(model.adapter_b)]);

    if (!is_side_mode(model.mode)) {
        std::vector<Tensor> body(bound.begin() + model.backbone_begin,
                                 bound.begin() + model.backbone_begin +
                                     static_cast<std::ptrdiff_t>(backbone_param_names(model.backbone).size()));
        return backbone_forward(model.backbone, body, ctx, x, false).final;
    }

    TowerActs local;
    if (towers == nullptr) {
        local = run_towers(model, ctx, x);
        towers = &local;
    }

    std::size_t L = model.backbone.layers;
    std::vector<Tensor> base_signal = towers->base;
    if (mode_needs_backup(model.mode)) {
        std::vector<Tensor> alphas;
        for (int idx : model.alpha_b_idx) alphas.push_back(bound[static_cast<std::size_t>(idx)]);
        base_signal = base_merge(towers->base, towers->backup, alphas);
    }

    auto side_layer = [&](std::size_t i, const Tensor& in) {
        Tensor pre = add(matmul(in, bound[static_cast<std::size_t>(model.side_w[i])]),
                         bound[static_cast<std::size_t>(model.side_b[i])]);
        return i + 1 < L ? relu(pre) : pre;
    };
    auto down = [&](std::size_t slot, const Tensor& b) {
        return add(matmul(b, bound[static_cast<std::size_t>(model.down_w[slot])]),
                   bound[static_cast<std::size_t>(model.down_b[slot])]);
    };

    if (mode_layerwise_fusion(model.mode)) {
        Tensor z = x;
        for (std::size_t i = 0; i < L; ++i) {
            Tensor s_i = side_layer(i, z);
            z = blend(bound[static_cast<std::size_t>(model.alpha_s_idx[i])], down(i, base_signal[i]), s_i);
        }
        return z;
    }
    Tensor m = x;
    for (std::size_t i = 0; i < L; ++i) m = side_layer(i, m);
    return blend(bound[static_cast<std::size_t>(model.alpha_s_idx[0])], down(0, base_signal[L - 1]), m);
}

// ---------------------------------------------------------------------------
// Tuning
// ---------------------------------------------------------------------------

// One prepared downstream task: batched graph data, labels, splits, and (for
// edge tasks) the candidate pairs.
struct TaskData {
    TaskKind kind = TaskKind::NodeTask;
    GraphContext ctx;
    Tensor features;
    std::vector<std::int64_t> graph_id;
    std::size_t num_graphs = 0;
    std::vector<std::int64_t> labels;  // per node / per graph / per pair
    Splits splits;                     // node, graph or pair indices
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // edge tasks
    std::int64_t num_classes = 2;
};

inline TaskData make_task_data(const GraphSet& set) {
    if (!set.has_splits()) throw ConfigError("task data: container carries no splits; run make_splits");
    if (set.kind == TaskKind::EdgeTask) throw ConfigError("task data: use make_edge_task_data");
    TaskData d;
    d.kind = set.kind;
    Batch batch = batch_graphs(set.graphs);
    d.ctx = GraphContext::make(batch.adj);
    d.features = batch.features;
    d.graph_id = batch.graph_id;
    d.num_graphs = batch.num_graphs;
    d.num_classes = set.num_classes;
    d.splits = set.splits;
    if (set.kind == TaskKind::NodeTask) {
        d.labels = set.graphs.at(0).node_labels;
        if (d.labels.empty()) throw DataError("task data: node task without node labels");
    } else {
        for (const Graph& g : set.graphs) {
            if (!g.graph_label) throw DataError("task data: graph task with unlabeled graph");
            d.labels.push_back(*g.graph_label);
        }
    }
    return d;
}

// Reformulates a node-task container into link prediction: hold out edges,
// sample matched negatives, split the labeled pairs.
inline TaskData make_edge_task_data(const GraphSet& node_set, double holdout_ratio, std::uint64_t seed,
                                    const std::vector<double>& fractions = {0.6, 0.2, 0.2}) {
    if (node_set.kind != TaskKind::NodeTask)
        throw ConfigError("edge task data: expected a node_task container");
    EdgeTask et = sample_edge_task(node_set.graphs.at(0), holdout_ratio, seed);
    TaskData d;
    d.kind = TaskKind::EdgeTask;
    Batch batch = batch_graphs({et.graph});
    d.ctx = GraphContext::make(batch.adj);
    d.features = batch.features;
    d.graph_id = batch.graph_id;
    d.num_graphs = 1;
    d.pairs = et.pairs;
    d.labels = et.labels;
    d.num_classes = 2;

    std::vector<std::int64_t> idx(et.pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int64_t>(i);
    Rng rng(seed ^ 0x5eed);
    rng.shuffle(idx);
    std::size_t n = idx.size();
    std::size_t n_train = static_cast<std::size_t>(fractions.at(0) * static_cast<double>(n));
    std::size_t n_val = static_cast<std::size_t>(fractions.at(1) * static_cast<double>(n));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw ConfigError("edge task data: too few pairs to split");
    d.splits.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.splits.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    d.splits.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return d;
}

struct TrainReport {
    std::string mode;
    std::size_t tunable_params = 0;
    std::size_t epochs_run = 0;
    std::size_t convergence_epoch = 0;
    double seconds_total = 0.0;
    double seconds_to_converge = 0.0;
    double train_metric = 0.0;
    double val_metric = 0.0;
    double test_metric = 0.0;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_val_metric;
    std::vector<std::vector<std::int64_t>> confusion;  // test split, cls tasks only
};

namespace detail {

inline std::vector<std::int64_t> select_labels(const std::vector<std::int64_t>& labels,
                                               const std::vector<std::int64_t>& idx) {
    std::vector<std::int64_t> out;
    out.reserve(idx.size());
    for (std::int64_t i : idx) out.push_back(labels[static_cast<std::size_t>(i)]);
    return out;
}

inline std::vector<std::pair<std::int64_t, std::int64_t>> select_pairs(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs, const std::vector<std::int64_t>& idx) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    out.reserve(idx.size());
    for (std::int64_t i : idx) out.push_back(pairs[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace detail

// Classification logits for node/graph tasks; edge tasks evaluate via
// pair scores instead.
inline Tensor task_logits(const SideTuneModel& model, const std::vector<Tensor>& bound,
                          const TaskData& data, const TowerActs* towers) {
    Tensor z = sidetune_repr(model, bound, data.ctx, data.features, towers);
    HeadContext hctx;
    hctx.graph_id = &data.graph_id;
    hctx.num_graphs = data.num_graphs;
    const Tensor* w = model.head_w >= 0 ? &bound[static_cast<std::size_t>(model.head_w)] : nullptr;
    const Tensor* b = model.head_b >= 0 ? &bound[static_cast<std::size_t>(model.head_b)] : nullptr;
    return head_forward(model.head, z, hctx, w, b);
}

// Metric of one split given the full-task logits (or the fused reps for edge
// tasks, scored per selected pair).
inline double split_metric_from(const Tensor& full, const TaskData& data,
                                const std::vector<std::int64_t>& idx, Metric metric,
                                std::vector<std::vector<std::int64_t>>* confusion_out = nullptr) {
    auto labels = detail::select_labels(data.labels, idx);
    if (data.kind == TaskKind::EdgeTask) {
        Tensor logits = edge_logits(full, detail::select_pairs(data.pairs, idx));
        return roc_auc(logits.data(), labels);
    }
    Tensor logits = row_select(full, idx);
    if (confusion_out != nullptr) *confusion_out = confusion_matrix(logits, labels, data.num_classes);
    if (metric == Metric::Accuracy) return accuracy(logits, labels);
    if (data.num_classes != 2) throw ConfigError("roc_auc metric needs a binary task");
    std::vector<double> scores;
    scores.reserve(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) scores.push_back(logits.at(i, 1) - logits.at(i, 0));
    return roc_auc(scores, labels);
}

// One plain forward at the current parameter values, then per-split metrics.
inline double eval_split_metric(const SideTuneModel& model, const TaskData& data,
                                const std::vector<std::int64_t>& idx, Metric metric,
                                const TowerActs* towers,
                                std::vector<std::vector<std::int64_t>>* confusion_out = nullptr) {
    std::vector<Tensor> values;
    for (const auto& p : model.trainable) values.push_back(p.value);
    Tensor full = data.kind == TaskKind::EdgeTask
                      ? sidetune_repr(model, values, data.ctx, data.features, towers)
                      : task_logits(model, values, data, towers);
    return split_metric_from(full, data, idx, metric, confusion_out);
}

// Optimizes the trainable set only; the base and backup towers are frozen and
// verified byte-identical after the run. Early stopping on the validation
// metric; the best epoch defines convergence for speed-up accounting.
inline TrainReport tune(SideTuneModel& model, const TaskData& data, const SideTuneConfig& cfg,
                        Metric metric) {
    if (data.kind == TaskKind::EdgeTask && model.head.kind != HeadKind::EdgePred)
        throw ConfigError("tune: edge task needs the edge_pred head");
    if (data.kind != TaskKind::EdgeTask && model.head.kind == HeadKind::EdgePred)
        throw ConfigError("tune: edge_pred head on a non-edge task");
    bool pooled = model.head.kind == HeadKind::GraphCls || model.head.kind == HeadKind::PtcldCls;
    if (pooled && (data.kind != TaskKind::GraphTask && data.kind != TaskKind::PointCloudTask))
        throw ConfigError("tune: pooled head on a non-graph task");
    if (model.head.kind == HeadKind::NodeCls && data.kind != TaskKind::NodeTask)
        throw ConfigError("tune: node head on a non-node task");

    auto frozen_bytes = [&] {
        std::vector<std::vector<double>> snap;
        for (const auto& p : model.base) snap.push_back(p.value.data());
        for (const auto& p : model.backup) snap.push_back(p.value.data());
        return snap;
    };
    auto before = frozen_bytes();

    bool cacheable = model.adapter.kind != AdapterKind::LinearTrainable && is_side_mode(model.mode);
    Tensor features = data.features;
    if (model.adapter.kind != AdapterKind::LinearTrainable && model.adapter.src_dim != 0)
        features = input_adapt(data.features, model.adapter);
    TaskData adapted = data;
    adapted.features = features;
    TowerActs cached;
    if (cacheable) cached = run_towers(model, adapted.ctx, features);
    const TowerActs* towers = cacheable ? &cached : nullptr;

    TrainReport report;
    report.mode = tune_mode_name(model.mode);
    report.tunable_params = model.count_tunables();

    auto train_labels = detail::select_labels(data.labels, data.splits.train);
    Adam adam(AdamConfig{.lr = cfg.lr});
    double best_val = -1.0;
    std::size_t best_epoch = 0;
    double best_train = 0.0, best_test = 0.0;
    std::vector<std::vector<std::int64_t>> best_confusion;

    auto eval_all = [&](std::size_t epoch) {
        std::vector<Tensor> values;
        values.reserve(model.trainable.size());
        for (const auto& p : model.trainable) values.push_back(p.value);
        Tensor full = data.kind == TaskKind::EdgeTask
                          ? sidetune_repr(model, values, adapted.ctx, adapted.features, towers)
                          : task_logits(model, values, adapted, towers);
        std::vector<std::vector<std::int64_t>> conf;
        double train_m = split_metric_from(full, adapted, data.splits.train, metric);
        double val_m = split_metric_from(full, adapted, data.splits.val, metric);
        double test_m = split_metric_from(full, adapted, data.splits.test, metric,
                                          data.kind == TaskKind::EdgeTask ? nullptr : &conf);
        report.epoch_val_metric.push_back(val_m);
        if (val_m > best_val) {
            best_val = val_m;
            best_epoch = epoch;
            best_train = train_m;
            best_test = test_m;
            best_confusion = conf;
            report.seconds_to_converge = report.seconds_total;
        }
    };

    if (cfg.epochs == 0) eval_all(0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Tape tape;
        std::vector<Tensor> bound;
        bound.reserve(model.trainable.size());
        for (const auto& p : model.trainable) bound.push_back(tape.watch(p.value));

        Tensor loss;
        if (data.kind == TaskKind::EdgeTask) {
            Tensor z = sidetune_repr(model, bound, adapted.ctx, adapted.features, towers);
            Tensor logits = edge_logits(z, detail::select_pairs(data.pairs, data.splits.train));
            loss = bce_with_logits(logits, train_labels);
        } else {
            Tensor logits = row_select(task_logits(model, bound, adapted, towers), data.splits.train);
            loss = cross_entropy(log_softmax(logits), train_labels);
        }
        if (!std::isfinite(loss.item()))
            throw NumericError("tune: non-finite loss at step " + std::to_string(epoch));
        tape.backward(loss);
        std::vector<Tensor> grads;
        grads.reserve(bound.size());
        for (const Tensor& b : bound) grads.push_back(tape.grad(b));
        adam.step(model.trainable, grads);
        auto t1 = std::chrono::steady_clock::now();
        report.seconds_total += std::chrono::duration<double>(t1 - t0).count();

        report.epoch_loss.push_back(loss.item());
        report.epochs_run = epoch;
        eval_all(epoch);
        if (epoch - best_epoch >= cfg.patience) break;
    }

    report.convergence_epoch = best_epoch;
    report.train_metric = best_train;
    report.val_metric = best_val;
    report.test_metric = best_test;
    report.confusion = best_confusion;

    auto after = frozen_bytes();
    if (after != before)
        throw std::logic_error("tune: frozen base/backup parameters were mutated during tuning");
    return report;
}

}  // namespace graphbridge
