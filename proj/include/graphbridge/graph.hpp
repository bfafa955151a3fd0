#pragma once

// Canonical graph containers: a single Graph, a GraphSet (task + graphs +
// splits), and disjoint-union batching. Containers are immutable after
// construction/load; every mutation-like operation returns a fresh value.

#include <optional>
#include <string>
#include <vector>

#include "graphbridge/common.hpp"
#include "graphbridge/sparse.hpp"
#include "graphbridge/tensor.hpp"

namespace graphbridge {

enum class TaskKind { NodeTask, GraphTask, EdgeTask, PointCloudTask };

inline std::string task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::NodeTask: return "node_task";
        case TaskKind::GraphTask: return "graph_task";
        case TaskKind::EdgeTask: return "edge_task";
        case TaskKind::PointCloudTask: return "pointcloud_task";
    }
    throw std::logic_error("bad TaskKind");
}

inline TaskKind task_kind_from(const std::string& s) {
    if (s == "node_task") return TaskKind::NodeTask;
    if (s == "graph_task") return TaskKind::GraphTask;
    if (s == "edge_task") return TaskKind::EdgeTask;
    if (s == "pointcloud_task") return TaskKind::PointCloudTask;
    throw DataError("unknown task kind: " + s);
}

struct Graph {
    std::size_t num_nodes = 0;
    Tensor features;  // [n x d]
    SparseAdj adj;
    bool undirected = true;
    std::vector<std::int64_t> node_labels;        // empty when absent
    std::optional<std::int64_t> graph_label;

    std::size_t feature_dim() const { return features.cols(); }

    std::vector<std::vector<std::int64_t>> neighbor_lists() const {
        std::vector<std::vector<std::int64_t>> nbrs(num_nodes);
        for (const auto& [s, d] : adj.edges) nbrs[static_cast<std::size_t>(s)].push_back(d);
        return nbrs;
    }

    void validate(std::int64_t num_classes, const std::string& where) const {
        if (features.rank() != 2 || features.rows() != num_nodes)
            throw DataError(where + ".features: " + std::to_string(features.rows()) + " rows for " +
                            std::to_string(num_nodes) + " nodes");
        if (adj.num_nodes != num_nodes)
            throw DataError(where + ".edges: adjacency sized for " + std::to_string(adj.num_nodes) +
                            " nodes, graph has " + std::to_string(num_nodes));
        for (std::size_t e = 0; e < adj.edges.size(); ++e) {
            auto [s, d] = adj.edges[e];
            if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= num_nodes ||
                static_cast<std::size_t>(d) >= num_nodes)
                throw DataError(where + ".edges[" + std::to_string(e) + "]: endpoint (" +
                                std::to_string(s) + "," + std::to_string(d) + ") out of range [0," +
                                std::to_string(num_nodes) + ")");
        }
        if (!node_labels.empty() && node_labels.size() != num_nodes)
            throw DataError(where + ".node_labels: " + std::to_string(node_labels.size()) +
                            " labels for " + std::to_string(num_nodes) + " nodes");
        for (std::size_t i = 0; i < node_labels.size(); ++i)
            if (node_labels[i] < 0 || node_labels[i] >= num_classes)
                throw DataError(where + ".node_labels[" + std::to_string(i) + "]: label " +
                                std::to_string(node_labels[i]) + " outside [0," +
                                std::to_string(num_classes) + ")");
        if (graph_label && (*graph_label < 0 || *graph_label >= num_classes))
            throw DataError(where + ".graph_label: label " + std::to_string(*graph_label) +
                            " outside [0," + std::to_string(num_classes) + ")");
        if (!features.all_finite()) throw DataError(where + ".features: non-finite value");
    }
};

struct Splits {
    std::vector<std::int64_t> train, val, test;
    bool empty() const { return train.empty() && val.empty() && test.empty(); }
};

struct GraphSet {
    TaskKind kind = TaskKind::NodeTask;
    std::vector<Graph> graphs;
    std::int64_t num_classes = 0;
    std::size_t feature_dim = 0;
    Splits splits;

    bool has_splits() const { return !splits.empty(); }

    std::size_t num_items() const {
        return kind == TaskKind::NodeTask ? graphs.at(0).num_nodes : graphs.size();
    }

    void validate() const {
        if (graphs.empty()) throw DataError("graphs: empty container");
        if (kind == TaskKind::NodeTask && graphs.size() != 1)
            throw DataError("graphs: node_task containers hold exactly one graph, got " +
                            std::to_string(graphs.size()));
        for (std::size_t i = 0; i < graphs.size(); ++i) {
            const std::string where = "graphs[" + std::to_string(i) + "]";
            graphs[i].validate(num_classes, where);
            if (graphs[i].feature_dim() != feature_dim)
                throw DataError(where + ".features: dim " + std::to_string(graphs[i].feature_dim()) +
                                " != container feature_dim " + std::to_string(feature_dim));
        }
        if (has_splits()) {
            std::size_t n = num_items();
            std::vector<char> seen(n, 0);
            auto check = [&](const std::vector<std::int64_t>& part, const char* name) {
                for (std::int64_t idx : part) {
                    if (idx < 0 || static_cast<std::size_t>(idx) >= n)
                        throw DataError(std::string("splits.") + name + ": index " +
                                        std::to_string(idx) + " out of range [0," + std::to_string(n) + ")");
                    if (seen[static_cast<std::size_t>(idx)]++)
                        throw DataError(std::string("splits.") + name + ": index " +
                                        std::to_string(idx) + " appears in more than one split");
                }
            };
            check(splits.train, "train");
            check(splits.val, "val");
            check(splits.test, "test");
        }
    }
};

struct Batch {
    Tensor features;                       // [sum(n_g) x d]
    SparseAdj adj;                         // block-diagonal, no cross-graph edges
    std::vector<std::int64_t> graph_id;    // owner graph per node, non-decreasing
    std::vector<std::size_t> offsets;      // node offset per graph
    std::size_t num_graphs = 0;
};

inline Batch batch_graphs(const std::vector<Graph>& graphs) {
    if (graphs.empty()) throw DataError("batch_graphs: empty list");
    std::size_t d = graphs[0].feature_dim();
    std::size_t total = 0;
    for (const Graph& g : graphs) {
        if (g.feature_dim() != d)
            throw DataError("batch_graphs: mixed feature dims " + std::to_string(d) + " and " +
                            std::to_string(g.feature_dim()));
        total += g.num_nodes;
    }
    Batch b;
    b.num_graphs = graphs.size();
    b.offsets.reserve(graphs.size());
    b.graph_id.reserve(total);
    std::vector<double> feats;
    feats.reserve(total * d);
    b.adj.num_nodes = total;
    std::size_t off = 0;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Graph& g = graphs[gi];
        b.offsets.push_back(off);
        feats.insert(feats.end(), g.features.data().begin(), g.features.data().end());
        for (std::size_t i = 0; i < g.num_nodes; ++i) b.graph_id.push_back(static_cast<std::int64_t>(gi));
        for (const auto& [s, dgt] : g.adj.edges)
            b.adj.edges.emplace_back(s + static_cast<std::int64_t>(off), dgt + static_cast<std::int64_t>(off));
        off += g.num_nodes;
    }
    b.adj.edge_weights.assign(b.adj.edges.size(), 1.0);
    b.features = Tensor({total, d}, std::move(feats));
    return b;
}

// Replaces the adjacency with both directions of the given unique undirected
// pairs, unit weights, canonical order.
inline void rebuild_undirected(Graph& g, const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
    g.adj.edges.clear();
    for (const auto& [s, d] : pairs) {
        g.adj.edges.emplace_back(s, d);
        if (s != d) g.adj.edges.emplace_back(d, s);
    }
    std::sort(g.adj.edges.begin(), g.adj.edges.end());
    g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);
}

// Induced subgraph over `kept` (must be sorted, unique, non-empty); node i of
// the result is kept[i].
inline Graph induced_subgraph(const Graph& g, const std::vector<std::int64_t>& kept) {
    if (kept.empty()) throw DataError("induced_subgraph: empty node set");
    std::vector<std::int64_t> remap(g.num_nodes, -1);
    for (std::size_t i = 0; i < kept.size(); ++i) remap[static_cast<std::size_t>(kept[i])] = static_cast<std::int64_t>(i);
    Graph out;
    out.num_nodes = kept.size();
    out.undirected = g.undirected;
    std::size_t d = g.feature_dim();
    std::vector<double> feats(kept.size() * d);
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) feats[i * d + j] = g.features.at(static_cast<std::size_t>(kept[i]), j);
    out.features = Tensor({kept.size(), d}, std::move(feats));
    out.adj.num_nodes = kept.size();
    for (const auto& [s, dst] : g.adj.edges) {
        std::int64_t ns = remap[static_cast<std::size_t>(s)];
        std::int64_t nd = remap[static_cast<std::size_t>(dst)];
        if (ns >= 0 && nd >= 0) out.adj.edges.emplace_back(ns, nd);
    }
    out.adj.edge_weights.assign(out.adj.edges.size(), 1.0);
    if (!g.node_labels.empty()) {
        out.node_labels.reserve(kept.size());
        for (std::int64_t k : kept) out.node_labels.push_back(g.node_labels[static_cast<std::size_t>(k)]);
    }
    out.graph_label = g.graph_label;
    return out;
}

}  // namespace graphbridge
