#pragma once

// Adam with bias correction. Parameters are replaced, not mutated, so frozen
// tensors shared elsewhere can never be disturbed by an optimizer step.

#include <vector>

#include "graphbridge/params.hpp"

namespace graphbridge {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamList& params, const std::vector<Tensor>& grads) {
        if (grads.size() != params.size()) throw std::logic_error("Adam: grads/params size mismatch");
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                m_[i].assign(params[i].value.size(), 0.0);
                v_[i].assign(params[i].value.size(), 0.0);
            }
        }
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Tensor& g = grads[i];
            if (g.size() != params[i].value.size()) throw std::logic_error("Adam: grad shape mismatch");
            std::vector<double> w(params[i].value.data());
            for (std::size_t j = 0; j < w.size(); ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                double mhat = m_[i][j] / bc1;
                double vhat = v_[i][j] / bc2;
                w[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            params[i].value = Tensor(params[i].value.shape(), std::move(w));
        }
    }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace graphbridge
