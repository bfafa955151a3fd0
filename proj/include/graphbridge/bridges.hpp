#pragma once

// Input bridge (feature-dimension adapters), output bridge (task heads),
// point-cloud k-NN graph construction, and edge-task sampling.

#include <limits>
#include <set>
#include <string>
#include <vector>

#include "graphbridge/graph.hpp"
#include "graphbridge/params.hpp"

namespace graphbridge {

enum class AdapterKind { Identity, PadTruncate, RandProject, LinearTrainable };

inline std::string adapter_kind_name(AdapterKind k) {
    switch (k) {
        case AdapterKind::Identity: return "identity";
        case AdapterKind::PadTruncate: return "pad_truncate";
        case AdapterKind::RandProject: return "rand_project";
        case AdapterKind::LinearTrainable: return "linear_trainable";
    }
    throw std::logic_error("bad AdapterKind");
}

inline AdapterKind adapter_kind_from(const std::string& s) {
    if (s == "identity") return AdapterKind::Identity;
    if (s == "pad_truncate") return AdapterKind::PadTruncate;
    if (s == "rand_project") return AdapterKind::RandProject;
    if (s == "linear_trainable") return AdapterKind::LinearTrainable;
    throw ConfigError("unknown adapter kind: " + s);
}

struct AdapterSpec {
    AdapterKind kind = AdapterKind::PadTruncate;
    std::size_t src_dim = 0;
    std::size_t dst_dim = 0;
    std::uint64_t seed = 0;  // rand_project

    void validate() const {
        if (src_dim < 1 || dst_dim < 1) throw ConfigError("adapter: dims must be >= 1");
        if (kind == AdapterKind::Identity && src_dim != dst_dim)
            throw ConfigError("adapter: identity with src_dim " + std::to_string(src_dim) +
                              " != dst_dim " + std::to_string(dst_dim));
    }
};

// Frozen, parameter-free adapters. The trainable variant lives with the model
// parameters and is applied via input_adapt_linear.
inline Tensor input_adapt(const Tensor& x, const AdapterSpec& spec) {
    spec.validate();
    if (x.cols() != spec.src_dim)
        throw ConfigError("adapter: input has dim " + std::to_string(x.cols()) + ", spec expects " +
                          std::to_string(spec.src_dim));
    switch (spec.kind) {
        case AdapterKind::Identity:
            return x;
        case AdapterKind::PadTruncate: {
            std::size_t n = x.rows(), d = spec.dst_dim;
            std::vector<double> out(n * d, 0.0);
            std::size_t keep = std::min(spec.src_dim, d);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < keep; ++c) out[i * d + c] = x.at(i, c);
            return Tensor({n, d}, std::move(out));
        }
        case AdapterKind::RandProject: {
            Rng rng(spec.seed);
            double s = 1.0 / std::sqrt(static_cast<double>(spec.src_dim));
            std::vector<double> proj(spec.src_dim * spec.dst_dim);
            for (double& v : proj) v = s * rng.normal();
            return matmul(x, Tensor({spec.src_dim, spec.dst_dim}, std::move(proj)));
        }
        case AdapterKind::LinearTrainable:
            throw ConfigError("adapter: linear_trainable needs its weight and bias parameters");
    }
    throw std::logic_error("bad AdapterKind");
}

inline Tensor input_adapt_linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add(matmul(x, w), b);
}

// ---------------------------------------------------------------------------
// Output bridge
// ---------------------------------------------------------------------------

enum class HeadKind { GraphCls, NodeCls, EdgePred, PtcldCls };

inline std::string head_kind_name(HeadKind k) {
    switch (k) {
        case HeadKind::GraphCls: return "graph_cls";
        case HeadKind::NodeCls: return "node_cls";
        case HeadKind::EdgePred: return "edge_pred";
        case HeadKind::PtcldCls: return "ptcld_cls";
    }
    throw std::logic_error("bad HeadKind");
}

struct HeadSpec {
    HeadKind kind = HeadKind::NodeCls;
    std::size_t in_dim = 16;
    std::int64_t num_classes = 2;

    void validate() const {
        bool cls = kind != HeadKind::EdgePred;
        if (cls && num_classes < 2) throw ConfigError("head: classifier needs at least 2 classes");
    }
};

struct HeadContext {
    const std::vector<std::int64_t>* graph_id = nullptr;
    std::size_t num_graphs = 0;
    const std::vector<std::pair<std::int64_t, std::int64_t>>* pairs = nullptr;
};

// Per-pair dot product logits: z_u . z_v, shape [pairs x 1].
inline Tensor edge_logits(const Tensor& z, const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
    std::vector<std::int64_t> us, vs;
    us.reserve(pairs.size());
    vs.reserve(pairs.size());
    for (const auto& [u, v] : pairs) {
        us.push_back(u);
        vs.push_back(v);
    }
    Tensor prod = mul(row_select(z, us), row_select(z, vs));
    return matmul(prod, Tensor({z.cols(), 1}, std::vector<double>(z.cols(), 1.0)));
}

// graph_cls / ptcld_cls: mean pooling by graph id, then linear;
// node_cls: linear per node; edge_pred: sigmoid of the pair dot product.
inline Tensor head_forward(const HeadSpec& spec, const Tensor& z, const HeadContext& ctx,
                           const Tensor* w, const Tensor* b) {
    spec.validate();
    switch (spec.kind) {
        case HeadKind::GraphCls:
        case HeadKind::PtcldCls: {
            if (ctx.graph_id == nullptr || ctx.num_graphs == 0)
                throw ConfigError("head: pooled head needs the batch graph ids");
            Tensor pooled = segment_mean_rows(z, *ctx.graph_id, ctx.num_graphs);
            return add(matmul(pooled, *w), *b);
        }
        case HeadKind::NodeCls:
            return add(matmul(z, *w), *b);
        case HeadKind::EdgePred: {
            if (ctx.pairs == nullptr) throw ConfigError("head: edge head needs candidate pairs");
            return sigmoid(edge_logits(z, *ctx.pairs));
        }
    }
    throw std::logic_error("bad HeadKind");
}

// ---------------------------------------------------------------------------
// k-NN graph construction for point clouds
// ---------------------------------------------------------------------------

// k nearest Euclidean neighbors per point, ties broken by lower index;
// exactly k entries per point (pre-symmetrization).
inline std::vector<std::vector<std::int64_t>> knn_neighbors(const Tensor& points, std::size_t k) {
    std::size_t m = points.rows();
    if (k < 1 || k >= m) throw ConfigError("knn: need 1 <= k < num_points, got k=" + std::to_string(k) +
                                           " for " + std::to_string(m) + " points");
    std::size_t d = points.cols();
    std::vector<std::vector<std::int64_t>> nbrs(m);
    std::vector<std::pair<double, std::int64_t>> dist(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double diff = points.at(i, c) - points.at(j, c);
                s += diff * diff;
            }
            dist[j] = {s, static_cast<std::int64_t>(j)};
        }
        dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t t = 0; t < k; ++t) nbrs[i].push_back(dist[t].second);
        std::sort(dist.begin(), dist.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });
    }
    return nbrs;
}

inline Graph knn_graph(const Tensor& points, std::size_t k) {
    auto nbrs = knn_neighbors(points, k);
    std::set<std::pair<std::int64_t, std::int64_t>> pairs;
    for (std::size_t i = 0; i < nbrs.size(); ++i)
        for (std::int64_t j : nbrs[i]) {
            std::int64_t a = static_cast<std::int64_t>(i), b = j;
            if (a > b) std::swap(a, b);
            pairs.insert({a, b});
        }
    Graph g;
    g.num_nodes = points.rows();
    g.undirected = true;
    g.features = points;
    g.adj.num_nodes = g.num_nodes;
    for (const auto& [a, b] : pairs) {
        g.adj.edges.emplace_back(a, b);
        g.adj.edges.emplace_back(b, a);
    }
    std::sort(g.adj.edges.begin(), g.adj.edges.end());
    g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);
    return g;
}

// Builds the k-NN graph of every object in a point-cloud container.
inline GraphSet knn_graphset(const GraphSet& set, std::size_t k) {
    if (set.kind != TaskKind::PointCloudTask)
        throw ConfigError("knn_graphset expects a pointcloud_task container");
    GraphSet out = set;
    for (Graph& g : out.graphs) {
        Graph built = knn_graph(g.features, k);
        built.graph_label = g.graph_label;
        g = std::move(built);
    }
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Edge-task sampling (link prediction)
// ---------------------------------------------------------------------------

struct EdgeTask {
    Graph graph;  // message-passing adjacency with held-out edges removed
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // positives then negatives
    std::vector<std::int64_t> labels;                          // aligned 1/0
};

inline EdgeTask sample_edge_task(const Graph& g, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio > 1.0) throw ConfigError("edge task: ratio must lie in (0,1]");
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (auto [s, d] : g.adj.edges) {
        if (s >= d) continue;
        pairs.emplace_back(s, d);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    std::size_t e = pairs.size();
    if (e == 0) throw DataError("edge task: graph has no edges");
    std::size_t k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(e)));
    if (k >= e) throw ConfigError("edge task: holdout ratio would remove all edges");

    Rng rng(seed);
    rng.shuffle(pairs);
    std::vector<std::pair<std::int64_t, std::int64_t>> held(pairs.begin(),
                                                            pairs.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::pair<std::int64_t, std::int64_t>> kept(pairs.begin() + static_cast<std::ptrdiff_t>(k),
                                                            pairs.end());

    std::set<std::pair<std::int64_t, std::int64_t>> all_edges(pairs.begin(), pairs.end());
    std::size_t n = g.num_nodes;
    std::size_t max_pairs = n * (n - 1) / 2;
    if (max_pairs <= e) throw DataError("edge task: graph has no non-edges to sample negatives from");
    std::set<std::pair<std::int64_t, std::int64_t>> negatives;
    std::size_t guard = 0;
    while (negatives.size() < k) {
        if (++guard > 1000 * (k + 1) + max_pairs * 4)
            throw DataError("edge task: could not sample enough non-edges");
        std::int64_t a = static_cast<std::int64_t>(rng.below(n));
        std::int64_t b = static_cast<std::int64_t>(rng.below(n));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (all_edges.count({a, b})) continue;
        negatives.insert({a, b});
    }

    EdgeTask task;
    task.graph = g;
    std::sort(kept.begin(), kept.end());
    rebuild_undirected(task.graph, kept);
    for (const auto& p : held) {
        task.pairs.push_back(p);
        task.labels.push_back(1);
    }
    for (const auto& p : negatives) {
        task.pairs.push_back(p);
        task.labels.push_back(0);
    }
    return task;
}

}  // namespace graphbridge
