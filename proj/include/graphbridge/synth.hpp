#pragma once

// Seeded synthetic dataset generators: stochastic block model node tasks,
// motif-labeled molecule-style graph tasks, and point-cloud objects. Pure
// functions of (params, seed).

#include <array>
#include <set>
#include <vector>

#include "graphbridge/graph.hpp"

namespace graphbridge {

// Local clustering coefficient per node, brute force over neighbor pairs.
inline std::vector<double> clustering_coefficients(const Graph& g) {
    std::vector<std::set<std::int64_t>> nbr(g.num_nodes);
    for (const auto& [s, d] : g.adj.edges) {
        if (s == d) continue;
        nbr[static_cast<std::size_t>(s)].insert(d);
        nbr[static_cast<std::size_t>(d)].insert(s);
    }
    std::vector<double> cc(g.num_nodes, 0.0);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        const auto& ni = nbr[i];
        if (ni.size() < 2) continue;
        std::size_t links = 0;
        for (auto u = ni.begin(); u != ni.end(); ++u)
            for (auto v = std::next(u); v != ni.end(); ++v)
                if (nbr[static_cast<std::size_t>(*u)].count(*v)) ++links;
        cc[i] = 2.0 * static_cast<double>(links) /
                (static_cast<double>(ni.size()) * static_cast<double>(ni.size() - 1));
    }
    return cc;
}

inline std::size_t count_triangles(const Graph& g) {
    std::vector<std::set<std::int64_t>> nbr(g.num_nodes);
    for (const auto& [s, d] : g.adj.edges) {
        if (s == d) continue;
        nbr[static_cast<std::size_t>(s)].insert(d);
        nbr[static_cast<std::size_t>(d)].insert(s);
    }
    std::size_t tri = 0;
    for (std::size_t i = 0; i < g.num_nodes; ++i)
        for (std::int64_t u : nbr[i])
            for (std::int64_t v : nbr[i]) {
                if (u >= v || static_cast<std::size_t>(u) <= i || static_cast<std::size_t>(v) <= i) continue;
                if (nbr[static_cast<std::size_t>(u)].count(v)) ++tri;
            }
    return tri;
}

// ---------------------------------------------------------------------------
// Stochastic block model (node task)
// ---------------------------------------------------------------------------

struct SbmParams {
    std::vector<std::size_t> block_sizes;
    double p_in = 0.5;
    double p_out = 0.05;
    std::size_t feature_dim = 0;  // 0: one slot per block
    double feature_noise = 1.0;
};

inline GraphSet synth_sbm(const SbmParams& params, std::uint64_t seed) {
    if (params.block_sizes.empty()) throw ConfigError("sbm: no blocks");
    if (params.p_in < 0.0 || params.p_in > 1.0 || params.p_out < 0.0 || params.p_out > 1.0)
        throw ConfigError("sbm: probabilities must lie in [0,1]");
    std::size_t n = 0;
    for (std::size_t b : params.block_sizes) n += b;
    std::size_t blocks = params.block_sizes.size();
    std::size_t d = params.feature_dim == 0 ? blocks : params.feature_dim;
    if (d < blocks) throw ConfigError("sbm: feature_dim smaller than number of blocks");

    Rng rng(seed);
    Graph g;
    g.num_nodes = n;
    g.undirected = true;
    g.adj.num_nodes = n;
    g.node_labels.reserve(n);
    std::size_t node = 0;
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t k = 0; k < params.block_sizes[b]; ++k, ++node)
            g.node_labels.push_back(static_cast<std::int64_t>(b));

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double p = g.node_labels[i] == g.node_labels[j] ? params.p_in : params.p_out;
            if (rng.uniform() < p) {
                g.adj.edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
                g.adj.edges.emplace_back(static_cast<std::int64_t>(j), static_cast<std::int64_t>(i));
            }
        }
    std::sort(g.adj.edges.begin(), g.adj.edges.end());
    g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);

    std::vector<double> feats(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        feats[i * d + static_cast<std::size_t>(g.node_labels[i])] = 1.0;
        for (std::size_t c = 0; c < d; ++c) feats[i * d + c] += params.feature_noise * rng.normal();
    }
    g.features = Tensor({n, d}, std::move(feats));

    GraphSet set;
    set.kind = TaskKind::NodeTask;
    set.num_classes = static_cast<std::int64_t>(blocks);
    set.feature_dim = d;
    set.graphs.push_back(std::move(g));
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// Motif-labeled molecule-style graphs (graph task). Each graph is a random
// tree with exactly one planted cycle: a triangle for label 1, a 4-cycle for
// label 0. Node features are [1, deg/4, clustering, noise...].
// ---------------------------------------------------------------------------

struct MolParams {
    std::size_t count = 100;
    std::size_t min_nodes = 6;
    std::size_t max_nodes = 14;
    std::size_t feature_dim = 8;
    double feature_noise = 0.1;
};

inline GraphSet synth_mol(const MolParams& params, std::uint64_t seed) {
    if (params.count == 0) throw ConfigError("mol: count must be positive");
    if (params.min_nodes < 2 || params.max_nodes < params.min_nodes)
        throw ConfigError("mol: bad nodes-per-graph range");
    if (params.feature_dim < 3) throw ConfigError("mol: feature_dim must be at least 3");

    GraphSet set;
    set.kind = TaskKind::GraphTask;
    set.num_classes = 2;
    set.feature_dim = params.feature_dim;

    Rng rng(seed);
    for (std::size_t gi = 0; gi < params.count; ++gi) {
        std::int64_t label = static_cast<std::int64_t>(gi % 2);
        std::size_t base = params.min_nodes + rng.below(params.max_nodes - params.min_nodes + 1);
        std::size_t motif = label == 1 ? 3 : 4;
        std::size_t n = base + motif;

        Graph g;
        g.num_nodes = n;
        g.undirected = true;
        g.adj.num_nodes = n;
        g.graph_label = label;
        std::vector<std::pair<std::int64_t, std::int64_t>> und;
        // random recursive tree over the base nodes
        for (std::size_t i = 1; i < base; ++i)
            und.emplace_back(static_cast<std::int64_t>(rng.below(i)), static_cast<std::int64_t>(i));
        // planted cycle on the trailing motif nodes, bridged to a random base node
        std::int64_t m0 = static_cast<std::int64_t>(base);
        for (std::size_t k = 0; k < motif; ++k)
            und.emplace_back(m0 + static_cast<std::int64_t>(k),
                             m0 + static_cast<std::int64_t>((k + 1) % motif));
        und.emplace_back(static_cast<std::int64_t>(rng.below(base)), m0);
        for (auto& [s, d] : und)
            if (s > d) std::swap(s, d);
        std::sort(und.begin(), und.end());
        und.erase(std::unique(und.begin(), und.end()), und.end());
        for (const auto& [s, d] : und) {
            g.adj.edges.emplace_back(s, d);
            g.adj.edges.emplace_back(d, s);
        }
        std::sort(g.adj.edges.begin(), g.adj.edges.end());
        g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);

        std::vector<double> deg(n, 0.0);
        for (const auto& [s, d] : g.adj.edges) deg[static_cast<std::size_t>(d)] += 1.0;
        std::vector<double> cc;
        {
            Graph tmp = g;
            tmp.features = Tensor::zeros({n, 1});
            cc = clustering_coefficients(tmp);
        }
        std::vector<double> feats(n * params.feature_dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            feats[i * params.feature_dim + 0] = 1.0;
            feats[i * params.feature_dim + 1] = deg[i] / 4.0;
            feats[i * params.feature_dim + 2] = cc[i];
            for (std::size_t c = 3; c < params.feature_dim; ++c)
                feats[i * params.feature_dim + c] = params.feature_noise * rng.normal();
        }
        g.features = Tensor({n, params.feature_dim}, std::move(feats));
        set.graphs.push_back(std::move(g));
    }
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// Point-cloud objects (pointcloud task): raw 3-d coordinates, no edges; the
// k-NN bridge builds the graph downstream. Shape classes, in label order:
// sphere surface, cube volume, two elongated clusters.
// ---------------------------------------------------------------------------

struct PtcldParams {
    std::size_t count = 60;
    std::size_t points = 64;
    std::size_t num_classes = 3;  // 2 or 3 of {sphere, cube, two_cluster}
};

inline GraphSet synth_ptcld(const PtcldParams& params, std::uint64_t seed) {
    if (params.count == 0 || params.points < 4) throw ConfigError("ptcld: bad count/points");
    if (params.num_classes < 2 || params.num_classes > 3)
        throw ConfigError("ptcld: num_classes must be 2 or 3");
    GraphSet set;
    set.kind = TaskKind::PointCloudTask;
    set.num_classes = static_cast<std::int64_t>(params.num_classes);
    set.feature_dim = 3;

    Rng rng(seed);
    for (std::size_t gi = 0; gi < params.count; ++gi) {
        std::int64_t label = static_cast<std::int64_t>(gi % params.num_classes);
        std::vector<double> pts;
        pts.reserve(params.points * 3);
        for (std::size_t p = 0; p < params.points; ++p) {
            std::array<double, 3> v{};
            if (label == 0) {
                // uniform on the unit sphere surface
                double norm = 0.0;
                do {
                    for (double& c : v) c = rng.normal();
                    norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                } while (norm < 1e-9);
                for (double& c : v) c /= norm;
            } else if (label == 1) {
                for (double& c : v) c = rng.uniform(-1.0, 1.0);
            } else {
                // two elongated clusters at +-x
                double sign = (p % 2 == 0) ? 1.0 : -1.0;
                v[0] = sign * 0.8 + 0.25 * rng.normal();
                v[1] = 0.04 * rng.normal();
                v[2] = 0.04 * rng.normal();
            }
            pts.insert(pts.end(), v.begin(), v.end());
        }
        Graph g;
        g.num_nodes = params.points;
        g.undirected = true;
        g.adj.num_nodes = params.points;
        g.features = Tensor({params.points, 3}, std::move(pts));
        g.graph_label = label;
        set.graphs.push_back(std::move(g));
    }
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// Random-walk chunking of a node-task container into a pseudo graph-task
// corpus, for graph-level pre-training on node-level data.
// ---------------------------------------------------------------------------

inline GraphSet chunk_node_dataset(const GraphSet& set, std::size_t chunk_size, std::size_t count,
                                   std::uint64_t seed) {
    if (set.kind != TaskKind::NodeTask) throw ConfigError("chunking expects a node_task container");
    const Graph& g = set.graphs.at(0);
    if (g.num_nodes == 0) throw DataError("chunking: empty graph");
    chunk_size = std::min(chunk_size, g.num_nodes);
    auto nbrs = g.neighbor_lists();

    GraphSet out;
    out.kind = TaskKind::GraphTask;
    out.num_classes = 2;  // unused by contrastive pre-training
    out.feature_dim = set.feature_dim;

    Rng rng(seed);
    for (std::size_t c = 0; c < count; ++c) {
        std::set<std::int64_t> visited;
        std::int64_t cur = static_cast<std::int64_t>(rng.below(g.num_nodes));
        visited.insert(cur);
        std::size_t stalled = 0;
        while (visited.size() < chunk_size && stalled < 4 * chunk_size) {
            const auto& nb = nbrs[static_cast<std::size_t>(cur)];
            if (nb.empty()) {
                cur = static_cast<std::int64_t>(rng.below(g.num_nodes));
            } else {
                cur = nb[rng.below(nb.size())];
            }
            if (!visited.insert(cur).second) ++stalled;
            else stalled = 0;
        }
        while (visited.size() < chunk_size)
            visited.insert(static_cast<std::int64_t>(rng.below(g.num_nodes)));
        std::vector<std::int64_t> kept(visited.begin(), visited.end());
        Graph sub = induced_subgraph(g, kept);
        sub.node_labels.clear();
        sub.graph_label = 0;
        out.graphs.push_back(std::move(sub));
    }
    out.validate();
    return out;
}

}  // namespace graphbridge
