#pragma once

// Graph-level contrastive pre-training of the base model. Two view families:
// graph augmentation pairs (node drop / edge perturb / attr mask / subgraph)
// and weight-perturbed twin encoders. The objective is NT-Xent over cosine
// similarities with the counterpart view as the positive.

#include <string>
#include <vector>

#include "graphbridge/checkpoint.hpp"
#include "graphbridge/graph.hpp"
#include "graphbridge/optim.hpp"
#include "graphbridge/synth.hpp"

namespace graphbridge {

enum class AugmentKind { NodeDrop, EdgePerturb, AttrMask, Subgraph };

inline std::string augment_kind_name(AugmentKind k) {
    switch (k) {
        case AugmentKind::NodeDrop: return "node_drop";
        case AugmentKind::EdgePerturb: return "edge_perturb";
        case AugmentKind::AttrMask: return "attr_mask";
        case AugmentKind::Subgraph: return "subgraph";
    }
    throw std::logic_error("bad AugmentKind");
}

inline AugmentKind augment_kind_from(const std::string& s) {
    if (s == "node_drop") return AugmentKind::NodeDrop;
    if (s == "edge_perturb") return AugmentKind::EdgePerturb;
    if (s == "attr_mask") return AugmentKind::AttrMask;
    if (s == "subgraph") return AugmentKind::Subgraph;
    throw ConfigError("unknown augmentation kind: " + s);
}

struct AugmentSpec {
    AugmentKind kind = AugmentKind::NodeDrop;
    double ratio = 0.2;
    std::uint64_t seed = 0;
};

namespace detail {

// unique undirected pairs (s < d), self loops dropped
inline std::vector<std::pair<std::int64_t, std::int64_t>> undirected_pairs(const SparseAdj& adj) {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (auto [s, d] : adj.edges) {
        if (s == d) continue;
        if (s > d) std::swap(s, d);
        pairs.emplace_back(s, d);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

}  // namespace detail

inline Graph augment(const Graph& g, const AugmentSpec& spec) {
    if (spec.ratio < 0.0 || spec.ratio > 1.0) throw ConfigError("augment: ratio outside [0,1]");
    if (spec.ratio == 0.0) return g;
    Rng rng(spec.seed);
    switch (spec.kind) {
        case AugmentKind::NodeDrop: {
            std::size_t k = static_cast<std::size_t>(std::ceil(spec.ratio * static_cast<double>(g.num_nodes)));
            if (k >= g.num_nodes) throw ConfigError("augment: node_drop would leave 0 nodes");
            std::vector<std::int64_t> idx(g.num_nodes);
            for (std::size_t i = 0; i < g.num_nodes; ++i) idx[i] = static_cast<std::int64_t>(i);
            rng.shuffle(idx);
            std::vector<std::int64_t> kept(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
            std::sort(kept.begin(), kept.end());
            return induced_subgraph(g, kept);
        }
        case AugmentKind::EdgePerturb: {
            auto pairs = detail::undirected_pairs(g.adj);
            std::size_t e = pairs.size();
            if (e == 0) return g;
            std::size_t k = static_cast<std::size_t>(std::ceil(spec.ratio * static_cast<double>(e)));
            k = std::min(k, e);
            rng.shuffle(pairs);
            std::set<std::pair<std::int64_t, std::int64_t>> keep(pairs.begin() + static_cast<std::ptrdiff_t>(k),
                                                                 pairs.end());
            std::set<std::pair<std::int64_t, std::int64_t>> original(pairs.begin(), pairs.end());
            std::size_t added = 0, attempts = 0;
            std::size_t max_attempts = 50 * (k + 1) + 4 * g.num_nodes * g.num_nodes;
            while (added < k && attempts < max_attempts) {
                ++attempts;
                std::int64_t a = static_cast<std::int64_t>(rng.below(g.num_nodes));
                std::int64_t b = static_cast<std::int64_t>(rng.below(g.num_nodes));
                if (a == b) continue;
                if (a > b) std::swap(a, b);
                if (original.count({a, b}) || keep.count({a, b})) continue;
                keep.insert({a, b});
                ++added;
            }
            Graph out = g;
            rebuild_undirected(out, {keep.begin(), keep.end()});
            return out;
        }
        case AugmentKind::AttrMask: {
            std::size_t k = static_cast<std::size_t>(std::ceil(spec.ratio * static_cast<double>(g.num_nodes)));
            k = std::min(k, g.num_nodes);
            std::vector<std::int64_t> idx(g.num_nodes);
            for (std::size_t i = 0; i < g.num_nodes; ++i) idx[i] = static_cast<std::int64_t>(i);
            rng.shuffle(idx);
            Graph out = g;
            std::vector<double> feats(g.features.data());
            std::size_t d = g.feature_dim();
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t c = 0; c < d; ++c) feats[static_cast<std::size_t>(idx[i]) * d + c] = 0.0;
            out.features = Tensor({g.num_nodes, d}, std::move(feats));
            return out;
        }
        case AugmentKind::Subgraph: {
            std::size_t target =
                static_cast<std::size_t>(std::ceil((1.0 - spec.ratio) * static_cast<double>(g.num_nodes)));
            if (target == 0) throw ConfigError("augment: subgraph would leave 0 nodes");
            auto nbrs = g.neighbor_lists();
            std::set<std::int64_t> visited;
            std::int64_t cur = static_cast<std::int64_t>(rng.below(g.num_nodes));
            visited.insert(cur);
            std::size_t stalled = 0;
            while (visited.size() < target) {
                const auto& nb = nbrs[static_cast<std::size_t>(cur)];
                if (nb.empty() || stalled > 2 * g.num_nodes) {
                    cur = static_cast<std::int64_t>(rng.below(g.num_nodes));
                    stalled = 0;
                } else {
                    cur = nb[rng.below(nb.size())];
                }
                if (!visited.insert(cur).second) ++stalled;
                else stalled = 0;
            }
            std::vector<std::int64_t> kept(visited.begin(), visited.end());
            return induced_subgraph(g, kept);
        }
    }
    throw std::logic_error("bad AugmentKind");
}

// w' = w + eta * sd(w) * xi with xi standard normal, drawn per array.
// Arrays with zero variance come back unchanged.
inline ParamList perturb_weights(const ParamList& params, double eta, std::uint64_t seed) {
    if (eta < 0.0) throw ConfigError("perturb_weights: eta must be >= 0");
    if (eta == 0.0) return params;
    Rng rng(seed);
    ParamList out;
    out.reserve(params.size());
    for (const auto& p : params) {
        const auto& w = p.value.data();
        double mean = 0.0;
        for (double v : w) mean += v;
        mean /= std::max<std::size_t>(w.size(), 1);
        double var = 0.0;
        for (double v : w) var += (v - mean) * (v - mean);
        var /= std::max<std::size_t>(w.size(), 1);
        double sd = std::sqrt(var);
        std::vector<double> nw(w);
        if (sd > 0.0)
            for (double& v : nw) v += eta * sd * rng.normal();
        out.push_back({p.name, Tensor(p.value.shape(), std::move(nw))});
    }
    return out;
}

// NT-Xent over two aligned view batches of graph embeddings. For each of the
// 2N anchors the positive is its counterpart view; the other 2N-2 embeddings
// are negatives. Cosine similarities, temperature tau, mean over anchors.
inline Tensor ntxent_loss(const Tensor& za, const Tensor& zb, double tau) {
    if (tau <= 0.0) throw ConfigError("ntxent: temperature must be positive");
    if (za.rank() != 2 || !za.same_shape(zb))
        throw ShapeError("ntxent: view shapes differ: " + shape_str(za.shape()) + " vs " +
                         shape_str(zb.shape()));
    std::size_t n = za.rows();
    if (n < 2) throw ConfigError("ntxent: need at least 2 graphs per batch for negatives");
    Tensor z = row_normalize(vstack({za, zb}));
    Tensor sims = scale(matmul_nt(z, z), 1.0 / tau);
    std::vector<double> mask(4 * n * n, 0.0);
    for (std::size_t i = 0; i < 2 * n; ++i) mask[i * 2 * n + i] = -1e9;
    Tensor masked = add(sims, Tensor({2 * n, 2 * n}, std::move(mask)));
    std::vector<std::int64_t> positives(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        positives[i] = static_cast<std::int64_t>(i + n);
        positives[i + n] = static_cast<std::int64_t>(i);
    }
    return cross_entropy(log_softmax(masked), positives);
}

enum class PretrainMethod { GraphCL, SimGRACE };

inline std::string pretrain_method_name(PretrainMethod m) {
    return m == PretrainMethod::GraphCL ? "graphcl" : "simgrace";
}

inline PretrainMethod pretrain_method_from(const std::string& s) {
    if (s == "graphcl") return PretrainMethod::GraphCL;
    if (s == "simgrace") return PretrainMethod::SimGRACE;
    throw ConfigError("unknown pretrain method: " + s);
}

struct PretrainConfig {
    PretrainMethod method = PretrainMethod::GraphCL;
    double temperature = 0.5;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double eta = 1.0;  // simgrace perturbation magnitude
    AugmentKind aug1 = AugmentKind::NodeDrop;
    double aug1_ratio = 0.2;
    AugmentKind aug2 = AugmentKind::EdgePerturb;
    double aug2_ratio = 0.2;
    std::uint64_t seed = 0;

    void validate() const {
        if (temperature <= 0.0) throw ConfigError("pretrain: temperature must be positive");
        if (eta < 0.0) throw ConfigError("pretrain: eta must be >= 0");
        if (batch_size < 2) throw ConfigError("pretrain: batch_size must be >= 2");
    }
};

struct PretrainResult {
    Checkpoint checkpoint;
    std::vector<double> epoch_loss;
};

inline PretrainResult pretrain(const GraphSet& dataset, BackboneConfig backbone, const PretrainConfig& cfg) {
    cfg.validate();
    if (dataset.graphs.empty()) throw DataError("pretrain: empty dataset");
    if (dataset.kind != TaskKind::GraphTask)
        throw ConfigError("pretrain expects a graph_task corpus; chunk node-task data first");
    backbone.in_dim = dataset.feature_dim;
    backbone.validate();

    PretrainResult result;
    result.checkpoint = Checkpoint::fresh(backbone, cfg.seed, pretrain_method_name(cfg.method));
    ParamList& params = result.checkpoint.params;
    Adam adam(AdamConfig{.lr = cfg.lr});
    Rng order_rng = Rng(cfg.seed).fork(0xa5);
    Rng view_rng = Rng(cfg.seed).fork(0xb6);

    auto pool = [](const BackboneConfig& bc, const std::vector<Tensor>& p, const Batch& batch) {
        GraphContext ctx = GraphContext::make(batch.adj);
        Tensor out = backbone_forward(bc, p, ctx, batch.features, false).final;
        return segment_mean_rows(out, batch.graph_id, batch.num_graphs);
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(dataset.graphs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        order_rng.shuffle(order);
        double epoch_sum = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(start + cfg.batch_size, order.size());
            if (end - start < 2) continue;  // a single leftover graph has no negatives
            std::vector<Graph> graphs;
            for (std::size_t i = start; i < end; ++i) graphs.push_back(dataset.graphs[order[i]]);

            Tape tape;
            std::vector<Tensor> bound;
            for (const auto& p : params) bound.push_back(tape.watch(p.value));

            Tensor za, zb;
            if (cfg.method == PretrainMethod::GraphCL) {
                std::vector<Graph> v1, v2;
                for (const Graph& g : graphs) {
                    v1.push_back(augment(g, {cfg.aug1, cfg.aug1_ratio, view_rng.next_u64()}));
                    v2.push_back(augment(g, {cfg.aug2, cfg.aug2_ratio, view_rng.next_u64()}));
                }
                za = pool(backbone, bound, batch_graphs(v1));
                zb = pool(backbone, bound, batch_graphs(v2));
            } else {
                ParamList shaken = perturb_weights(params, cfg.eta, view_rng.next_u64());
                std::vector<Tensor> twin;
                for (std::size_t i = 0; i < params.size(); ++i) {
                    std::vector<double> noise(shaken[i].value.data());
                    for (std::size_t j = 0; j < noise.size(); ++j) noise[j] -= params[i].value[j];
                    twin.push_back(add(bound[i], Tensor(params[i].value.shape(), std::move(noise))));
                }
                Batch batch = batch_graphs(graphs);
                za = pool(backbone, bound, batch);
                zb = pool(backbone, twin, batch);
            }

            Tensor loss = ntxent_loss(za, zb, cfg.temperature);
            if (!std::isfinite(loss.item()))
                throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(start / cfg.batch_size));
            tape.backward(loss);
            std::vector<Tensor> grads;
            for (const Tensor& b : bound) grads.push_back(tape.grad(b));
            adam.step(params, grads);
            epoch_sum += loss.item();
            ++epoch_batches;
        }
        if (epoch_batches == 0) throw DataError("pretrain: dataset too small for batch_size");
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_batches));
    }
    return result;
}

}  // namespace graphbridge
