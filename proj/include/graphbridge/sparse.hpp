#pragma once

// Sparse adjacency in edge-list form plus the graph message-passing wrappers
// built on the tape primitives.

#include <utility>
#include <vector>

#include "graphbridge/common.hpp"
#include "graphbridge/tensor.hpp"

namespace graphbridge {

struct SparseAdj {
    std::size_t num_nodes = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;  // (src, dst)
    std::vector<double> edge_weights;                          // one per edge

    static SparseAdj from_edges(std::size_t n, std::vector<std::pair<std::int64_t, std::int64_t>> e,
                                double weight = 1.0) {
        SparseAdj a;
        a.num_nodes = n;
        a.edge_weights.assign(e.size(), weight);
        a.edges = std::move(e);
        a.validate();
        return a;
    }

    void validate() const {
        if (edge_weights.size() != edges.size())
            throw DataError("adjacency has " + std::to_string(edge_weights.size()) + " weights for " +
                            std::to_string(edges.size()) + " edges");
        for (const auto& [s, d] : edges)
            if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= num_nodes ||
                static_cast<std::size_t>(d) >= num_nodes)
                throw DataError("edge (" + std::to_string(s) + "," + std::to_string(d) +
                                ") out of range for " + std::to_string(num_nodes) + " nodes");
    }

    std::vector<std::size_t> in_degrees() const {
        std::vector<std::size_t> deg(num_nodes, 0);
        for (const auto& [s, d] : edges) deg[static_cast<std::size_t>(d)]++;
        return deg;
    }
};

// out[i] = sum over edges (j -> i) of weight(j,i) * x[j]
inline Tensor spmm(const SparseAdj& adj, const Tensor& x) {
    Tensor w({adj.edges.size()}, adj.edge_weights);
    if (adj.edges.empty()) w = Tensor({0}, {});
    return spmm_edges(adj.edges, adj.num_nodes, w, x);
}

// A-hat = D^{-1/2} (A + I) D^{-1/2}, returned as weighted edges including the
// self-loops. Input edge weights are ignored; degrees count A + I.
inline SparseAdj gcn_norm(const SparseAdj& adj) {
    SparseAdj out;
    out.num_nodes = adj.num_nodes;
    out.edges = adj.edges;
    for (std::size_t i = 0; i < adj.num_nodes; ++i)
        out.edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(i));
    std::vector<double> deg(adj.num_nodes, 0.0);
    for (const auto& [s, d] : out.edges) deg[static_cast<std::size_t>(d)] += 1.0;
    out.edge_weights.reserve(out.edges.size());
    for (const auto& [s, d] : out.edges)
        out.edge_weights.push_back(1.0 / std::sqrt(deg[static_cast<std::size_t>(s)] *
                                                   deg[static_cast<std::size_t>(d)]));
    return out;
}

// A + I with unit weights (GIN aggregation; also the GAT edge structure).
inline SparseAdj add_self_loops(const SparseAdj& adj) {
    SparseAdj out;
    out.num_nodes = adj.num_nodes;
    out.edges = adj.edges;
    for (std::size_t i = 0; i < adj.num_nodes; ++i)
        out.edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(i));
    out.edge_weights.assign(out.edges.size(), 1.0);
    return out;
}

// Edges sorted by (dst, src): groups incoming edges per target so the
// attention softmax can run segment-wise.
inline SparseAdj sort_by_dst(const SparseAdj& adj) {
    SparseAdj out = adj;
    std::vector<std::size_t> order(adj.edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (adj.edges[a].second != adj.edges[b].second) return adj.edges[a].second < adj.edges[b].second;
        return adj.edges[a].first < adj.edges[b].first;
    });
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.edges[i] = adj.edges[order[i]];
        out.edge_weights[i] = adj.edge_weights[order[i]];
    }
    return out;
}

}  // namespace graphbridge
