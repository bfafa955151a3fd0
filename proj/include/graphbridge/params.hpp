#pragma once

#include <string>
#include <vector>

#include "graphbridge/common.hpp"
#include "graphbridge/tensor.hpp"

namespace graphbridge {

struct NamedTensor {
    std::string name;
    Tensor value;
};

using ParamList = std::vector<NamedTensor>;

inline std::size_t total_size(const ParamList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.value.size();
    return n;
}

inline const Tensor& find_param(const ParamList& params, const std::string& name) {
    for (const auto& p : params)
        if (p.name == name) return p.value;
    throw DataError("missing parameter: " + name);
}

// Glorot-uniform weight, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = rng.uniform(-a, a);
    return Tensor({fan_in, fan_out}, std::move(w));
}

inline Tensor zero_bias(std::size_t dim) { return Tensor::zeros({1, dim}); }

}  // namespace graphbridge
