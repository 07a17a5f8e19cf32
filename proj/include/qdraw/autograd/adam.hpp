#pragma once

#include "qdraw/autograd/value.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qdraw::autograd {

/// Bias-corrected Adam. Moment tensors are keyed by position in the parameter
/// list handed to adam_step, which must stay stable across steps.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<Tensor> m, v;
};

inline void adam_step(std::vector<Value> &params, AdamState &state) {
    if (state.m.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const Value &p : params) {
            state.m.push_back(Tensor::zeros(p.data().shape));
            state.v.push_back(Tensor::zeros(p.data().shape));
        }
    } else if (state.m.size() != params.size()) {
        throw std::invalid_argument("adam_step: parameter count changed (" +
                                    std::to_string(params.size()) + " vs moments " +
                                    std::to_string(state.m.size()) + ")");
    }
    for (const Value &p : params)
        if (!p.has_grad())
            throw std::runtime_error("adam_step: missing gradient; run backward first");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor &data = params[k].mutable_data();
        const Tensor &grad = params[k].grad();
        Tensor &m = state.m[k];
        Tensor &v = state.v[k];
        for (std::size_t i = 0; i < data.numel(); ++i) {
            const double g = grad.v[i];
            m.v[i] = state.beta1 * m.v[i] + (1.0 - state.beta1) * g;
            v.v[i] = state.beta2 * v.v[i] + (1.0 - state.beta2) * g * g;
            const double m_hat = m.v[i] / bc1;
            const double v_hat = v.v[i] / bc2;
            data.v[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
        params[k].zero_grad();
    }
}

} // namespace qdraw::autograd
