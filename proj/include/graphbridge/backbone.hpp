#pragma once

// GCN, GAT and GIN layer stacks with per-layer activation capture. Layers are
// ReLU-separated; the last layer output is returned raw. GIN aggregates by
// sum over A+I (epsilon = 0) and transforms with a linear(in, 2h) -> ReLU ->
// linear(2h, h) block. GAT scores edges with leaky-relu attention normalized
// per target node.

#include <string>
#include <vector>

#include "graphbridge/params.hpp"
#include "graphbridge/sparse.hpp"
#include "graphbridge/tensor.hpp"

namespace graphbridge {

enum class BackboneKind { GCN, GAT, GIN };

inline std::string backbone_kind_name(BackboneKind k) {
    switch (k) {
        case BackboneKind::GCN: return "gcn";
        case BackboneKind::GAT: return "gat";
        case BackboneKind::GIN: return "gin";
    }
    throw std::logic_error("bad BackboneKind");
}

inline BackboneKind backbone_kind_from(const std::string& s) {
    if (s == "gcn") return BackboneKind::GCN;
    if (s == "gat") return BackboneKind::GAT;
    if (s == "gin") return BackboneKind::GIN;
    throw ConfigError("unknown backbone kind: " + s);
}

struct BackboneConfig {
    BackboneKind kind = BackboneKind::GCN;
    std::size_t layers = 2;
    std::size_t in_dim = 0;
    std::size_t hidden_dim = 100;
    std::size_t gat_heads = 1;
    double gat_slope = 0.2;

    void validate() const {
        if (layers < 1) throw ConfigError("backbone: layers must be >= 1");
        if (in_dim < 1 || hidden_dim < 1) throw ConfigError("backbone: dims must be >= 1");
        if (kind == BackboneKind::GAT) {
            if (gat_heads < 1 || hidden_dim % gat_heads != 0)
                throw ConfigError("backbone: gat_heads must divide hidden_dim");
        }
    }

    std::size_t layer_in(std::size_t i) const { return i == 0 ? in_dim : hidden_dim; }
};

inline std::vector<std::string> backbone_param_names(const BackboneConfig& cfg) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        std::string p = "layers." + std::to_string(i) + ".";
        switch (cfg.kind) {
            case BackboneKind::GCN:
                names.push_back(p + "weight");
                names.push_back(p + "bias");
                break;
            case BackboneKind::GAT:
                for (std::size_t h = 0; h < cfg.gat_heads; ++h) {
                    std::string hp = p + "head" + std::to_string(h) + ".";
                    names.push_back(hp + "weight");
                    names.push_back(hp + "att");
                }
                names.push_back(p + "bias");
                break;
            case BackboneKind::GIN:
                names.push_back(p + "mlp1.weight");
                names.push_back(p + "mlp1.bias");
                names.push_back(p + "mlp2.weight");
                names.push_back(p + "mlp2.bias");
                break;
        }
    }
    return names;
}

inline ParamList init_backbone(const BackboneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ParamList params;
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        std::size_t in = cfg.layer_in(i);
        std::size_t h = cfg.hidden_dim;
        std::string p = "layers." + std::to_string(i) + ".";
        switch (cfg.kind) {
            case BackboneKind::GCN:
                params.push_back({p + "weight", glorot(in, h, rng)});
                params.push_back({p + "bias", zero_bias(h)});
                break;
            case BackboneKind::GAT: {
                std::size_t hd = h / cfg.gat_heads;
                for (std::size_t k = 0; k < cfg.gat_heads; ++k) {
                    std::string hp = p + "head" + std::to_string(k) + ".";
                    params.push_back({hp + "weight", glorot(in, hd, rng)});
                    params.push_back({hp + "att", glorot(2 * hd, 1, rng)});
                }
                params.push_back({p + "bias", zero_bias(h)});
                break;
            }
            case BackboneKind::GIN:
                params.push_back({p + "mlp1.weight", glorot(in, 2 * h, rng)});
                params.push_back({p + "mlp1.bias", zero_bias(2 * h)});
                params.push_back({p + "mlp2.weight", glorot(2 * h, h, rng)});
                params.push_back({p + "mlp2.bias", zero_bias(h)});
                break;
        }
    }
    return params;
}

// Per-graph preprocessing shared across forward passes: the GCN-normalized
// adjacency and the self-looped edge structure grouped by target for
// attention softmax.
struct GraphContext {
    std::size_t num_nodes = 0;
    SparseAdj gcn;
    SparseAdj loops_by_dst;
    std::vector<std::int64_t> src_idx, dst_idx, segments;

    static GraphContext make(const SparseAdj& adj) {
        GraphContext ctx;
        ctx.num_nodes = adj.num_nodes;
        ctx.gcn = gcn_norm(adj);
        ctx.loops_by_dst = sort_by_dst(add_self_loops(adj));
        ctx.src_idx.reserve(ctx.loops_by_dst.edges.size());
        ctx.dst_idx.reserve(ctx.loops_by_dst.edges.size());
        for (const auto& [s, d] : ctx.loops_by_dst.edges) {
            ctx.src_idx.push_back(s);
            ctx.dst_idx.push_back(d);
            ctx.segments.push_back(d);
        }
        return ctx;
    }
};

struct BackboneActivations {
    Tensor final;
    std::vector<Tensor> layers;  // b_1..b_L when capture was requested
};

// `params` must follow backbone_param_names(cfg) order. Inputs bound to a
// tape record the forward for backprop; plain tensors evaluate only.
inline BackboneActivations backbone_forward(const BackboneConfig& cfg, const std::vector<Tensor>& params,
                                            const GraphContext& ctx, const Tensor& x, bool capture) {
    cfg.validate();
    if (x.cols() != cfg.in_dim)
        throw ConfigError("input feature dim " + std::to_string(x.cols()) + " does not match backbone in_dim " +
                          std::to_string(cfg.in_dim) + "; an input bridge is required");
    if (x.rows() != ctx.num_nodes)
        throw ShapeError("backbone_forward: context for " + std::to_string(ctx.num_nodes) +
                         " nodes, features for " + std::to_string(x.rows()));

    BackboneActivations acts;
    Tensor h = x;
    std::size_t pi = 0;
    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        Tensor pre;
        switch (cfg.kind) {
            case BackboneKind::GCN: {
                const Tensor& w = params.at(pi++);
                const Tensor& b = params.at(pi++);
                pre = add(spmm(ctx.gcn, matmul(h, w)), b);
                break;
            }
            case BackboneKind::GAT: {
                std::vector<Tensor> heads;
                for (std::size_t k = 0; k < cfg.gat_heads; ++k) {
                    const Tensor& w = params.at(pi++);
                    const Tensor& att = params.at(pi++);
                    Tensor hw = matmul(h, w);
                    Tensor gathered = concat(row_select(hw, ctx.dst_idx), row_select(hw, ctx.src_idx));
                    Tensor score = leaky_relu(matmul(gathered, att), cfg.gat_slope);
                    Tensor alpha = segment_softmax(score, ctx.segments);
                    heads.push_back(spmm_edges(ctx.loops_by_dst.edges, ctx.num_nodes, alpha, hw));
                }
                const Tensor& b = params.at(pi++);
                pre = add(cfg.gat_heads == 1 ? heads[0] : concat(heads), b);
                break;
            }
            case BackboneKind::GIN: {
                const Tensor& w1 = params.at(pi++);
                const Tensor& b1 = params.at(pi++);
                const Tensor& w2 = params.at(pi++);
                const Tensor& b2 = params.at(pi++);
                Tensor agg = spmm(ctx.loops_by_dst, h);
                pre = add(matmul(relu(add(matmul(agg, w1), b1)), w2), b2);
                break;
            }
        }
        bool last = layer + 1 == cfg.layers;
        h = last ? pre : relu(pre);
        if (capture) acts.layers.push_back(h);
    }
    acts.final = h;
    return acts;
}

// Exact trainable-scalar counts per role, closed form.
enum class ParamRole { Backbone, Side, Head };

struct CountExtras {
    std::size_t side_hidden = 16;
    std::size_t head_in = 0;
    std::size_t num_classes = 2;
    bool edge_head = false;
};

inline std::size_t param_count(const BackboneConfig& cfg, ParamRole role, const CountExtras& extras = {}) {
    std::size_t h = cfg.hidden_dim;
    switch (role) {
        case ParamRole::Backbone: {
            std::size_t total = 0;
            for (std::size_t i = 0; i < cfg.layers; ++i) {
                std::size_t in = cfg.layer_in(i);
                switch (cfg.kind) {
                    case BackboneKind::GCN: total += in * h + h; break;
                    case BackboneKind::GAT: total += in * h + 2 * h + h; break;
                    case BackboneKind::GIN: total += in * 2 * h + 2 * h + 2 * h * h + h; break;
                }
            }
            return total;
        }
        case ParamRole::Side: {
            std::size_t s = extras.side_hidden;
            std::size_t total = cfg.in_dim * s + s;
            for (std::size_t i = 1; i < cfg.layers; ++i) total += s * s + s;
            return total;
        }
        case ParamRole::Head: {
            if (extras.edge_head) return 0;  // dot-product decoder has no parameters
            return extras.head_in * extras.num_classes + extras.num_classes;
        }
    }
    throw std::logic_error("bad ParamRole");
}

}  // namespace graphbridge
