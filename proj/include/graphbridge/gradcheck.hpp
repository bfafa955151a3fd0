#pragma once

// Central finite-difference verification of tape gradients. The probe step is
// h = 1e-5 at 64-bit precision; a parameter passes when
// max over entries of |g_ad - g_fd| / max(1, |g_fd|) <= tol.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "graphbridge/params.hpp"
#include "graphbridge/tensor.hpp"

namespace graphbridge {

// Builds the scalar loss from the parameter tensors, in order. The closure
// must be deterministic; it is evaluated many times during probing.
using ForwardFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradCheckResult {
    std::vector<GradCheckEntry> params;
    bool all_pass = true;

    double worst() const {
        double w = 0.0;
        for (const auto& p : params) w = std::max(w, p.max_rel_err);
        return w;
    }
};

inline GradCheckResult grad_check(const ForwardFn& forward, const ParamList& params, double tol,
                                  double h = 1e-5) {
    Tape tape;
    std::vector<Tensor> bound;
    bound.reserve(params.size());
    for (const auto& p : params) bound.push_back(tape.watch(p.value));
    Tensor loss = forward(bound);
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite loss at base point");
    tape.backward(loss);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& b : bound) analytic.push_back(tape.grad(b));

    GradCheckResult result;
    std::vector<Tensor> probe(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) probe[i] = params[i].value;

    for (std::size_t i = 0; i < params.size(); ++i) {
        GradCheckEntry entry;
        entry.name = params[i].name;
        const Tensor& base = params[i].value;
        for (std::size_t j = 0; j < base.size(); ++j) {
            auto eval_at = [&](double delta) {
                std::vector<double> bumped(base.data());
                bumped[j] += delta;
                probe[i] = Tensor(base.shape(), std::move(bumped));
                double v = forward(probe).item();
                if (!std::isfinite(v))
                    throw NumericError("grad_check: non-finite loss probing parameter " + params[i].name);
                return v;
            };
            double fp = eval_at(h);
            double fm = eval_at(-h);
            double g_fd = (fp - fm) / (2.0 * h);
            double g_ad = analytic[i][j];
            double rel = std::abs(g_ad - g_fd) / std::max(1.0, std::abs(g_fd));
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        probe[i] = params[i].value;
        entry.pass = entry.max_rel_err <= tol;
        result.all_pass = result.all_pass && entry.pass;
        result.params.push_back(std::move(entry));
    }
    return result;
}

}  // namespace graphbridge
