#pragma once

// Checkpoint = backbone config + named parameter arrays + provenance, stored
// as canonical-key JSON with lossless decimal floats.

#include <string>

#include <json.hpp>

#include "graphbridge/backbone.hpp"
#include "graphbridge/container.hpp"
#include "graphbridge/params.hpp"

namespace graphbridge {

struct Checkpoint {
    BackboneConfig config;
    ParamList params;  // backbone_param_names(config) order
    std::string method = "none";
    std::uint64_t seed = 0;

    static Checkpoint fresh(const BackboneConfig& cfg, std::uint64_t init_seed,
                            const std::string& method = "none") {
        Checkpoint ck;
        ck.config = cfg;
        ck.params = init_backbone(cfg, init_seed);
        ck.method = method;
        ck.seed = init_seed;
        return ck;
    }
};

inline nlohmann::json backbone_config_to_json(const BackboneConfig& cfg) {
    return {{"kind", backbone_kind_name(cfg.kind)}, {"layers", cfg.layers},    {"in_dim", cfg.in_dim},
            {"hidden_dim", cfg.hidden_dim},         {"gat_heads", cfg.gat_heads}, {"gat_slope", cfg.gat_slope}};
}

inline BackboneConfig backbone_config_from_json(const nlohmann::json& j) {
    BackboneConfig cfg;
    cfg.kind = backbone_kind_from(j.at("kind").get<std::string>());
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.in_dim = j.at("in_dim").get<std::size_t>();
    cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    cfg.gat_heads = j.at("gat_heads").get<std::size_t>();
    cfg.gat_slope = j.at("gat_slope").get<double>();
    cfg.validate();
    return cfg;
}

// Expected shape of each named backbone parameter, derived from the config.
inline std::vector<std::size_t> backbone_param_shape(const BackboneConfig& cfg, const std::string& name) {
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        std::string p = "layers." + std::to_string(i) + ".";
        std::size_t in = cfg.layer_in(i);
        std::size_t h = cfg.hidden_dim;
        if (cfg.kind == BackboneKind::GCN) {
            if (name == p + "weight") return {in, h};
            if (name == p + "bias") return {1, h};
        } else if (cfg.kind == BackboneKind::GAT) {
            std::size_t hd = h / cfg.gat_heads;
            for (std::size_t k = 0; k < cfg.gat_heads; ++k) {
                std::string hp = p + "head" + std::to_string(k) + ".";
                if (name == hp + "weight") return {in, hd};
                if (name == hp + "att") return {2 * hd, 1};
            }
            if (name == p + "bias") return {1, h};
        } else {
            if (name == p + "mlp1.weight") return {in, 2 * h};
            if (name == p + "mlp1.bias") return {1, 2 * h};
            if (name == p + "mlp2.weight") return {2 * h, h};
            if (name == p + "mlp2.bias") return {1, h};
        }
    }
    throw DataError("checkpoint: parameter '" + name + "' does not belong to this config");
}

inline void save_ckpt(const Checkpoint& ck, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = backbone_config_to_json(ck.config);
    j["provenance"] = {{"method", ck.method}, {"seed", ck.seed}};
    nlohmann::json params = nlohmann::json::object();
    for (const auto& p : ck.params) params[p.name] = p.value.data();
    j["params"] = std::move(params);
    write_text_file(path, j.dump() + "\n");
}

inline Checkpoint load_ckpt(const std::string& path) {
    std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("checkpoint " + path + ": parse error at byte " + std::to_string(e.byte) + ": " +
                        e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            throw DataError("checkpoint " + path + ": unsupported format_version");
        Checkpoint ck;
        ck.config = backbone_config_from_json(j.at("config"));
        ck.method = j.at("provenance").at("method").get<std::string>();
        ck.seed = j.at("provenance").at("seed").get<std::uint64_t>();
        const auto& params = j.at("params");
        auto names = backbone_param_names(ck.config);
        if (params.size() != names.size())
            throw DataError("checkpoint " + path + ": " + std::to_string(params.size()) +
                            " parameter arrays for a config expecting " + std::to_string(names.size()));
        for (const auto& name : names) {
            if (!params.contains(name)) throw DataError("checkpoint " + path + ": missing parameter " + name);
            auto shape = backbone_param_shape(ck.config, name);
            auto data = params.at(name).get<std::vector<double>>();
            if (data.size() != Tensor::numel(shape))
                throw DataError("checkpoint " + path + ": parameter " + name + " has " +
                                std::to_string(data.size()) + " values, expected " +
                                std::to_string(Tensor::numel(shape)));
            ck.params.push_back({name, Tensor(shape, std::move(data))});
        }
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path + ": " + e.what());
    }
}

}  // namespace graphbridge
