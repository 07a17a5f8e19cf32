#pragma once

#include "qdraw/autograd/value.hpp"
#include "qdraw/rng.hpp"

#include <cmath>
#include <utility>

namespace qdraw::autograd {

/// Per-gate weights of one LSTM cell: W* act on the input, U* on the previous
/// hidden state, b* are biases. Gate order: input, forget, candidate, output.
struct LstmParams {
    int input_size = 0;
    int hidden_size = 0;
    Value w_i, u_i, b_i;
    Value w_f, u_f, b_f;
    Value w_g, u_g, b_g;
    Value w_o, u_o, b_o;

    /// Uniform(-a, a) with a = 1/sqrt(fan_in); forget-gate bias starts at 1 so
    /// early training retains cell state.
    static LstmParams init(int input_size, int hidden_size, Rng &rng) {
        LstmParams p;
        p.input_size = input_size;
        p.hidden_size = hidden_size;
        const auto h = static_cast<std::size_t>(hidden_size);
        const auto in = static_cast<std::size_t>(input_size);
        auto weight = [&rng](std::size_t rows, std::size_t cols) {
            const double a = 1.0 / std::sqrt(static_cast<double>(cols));
            Tensor t(Shape{rows, cols});
            for (double &x : t.v)
                x = rng.uniform(-a, a);
            return Value::param(std::move(t));
        };
        auto bias = [](std::size_t n, double fill) { return Value::param(Tensor(Shape{n}, fill)); };
        p.w_i = weight(h, in); p.u_i = weight(h, h); p.b_i = bias(h, 0.0);
        p.w_f = weight(h, in); p.u_f = weight(h, h); p.b_f = bias(h, 1.0);
        p.w_g = weight(h, in); p.u_g = weight(h, h); p.b_g = bias(h, 0.0);
        p.w_o = weight(h, in); p.u_o = weight(h, h); p.b_o = bias(h, 0.0);
        return p;
    }

    std::vector<Value> params() const {
        return {w_i, u_i, b_i, w_f, u_f, b_f, w_g, u_g, b_g, w_o, u_o, b_o};
    }
};

/// Standard LSTM cell step. Returns (h', c').
inline std::pair<Value, Value> lstm_cell(const Value &x, const Value &h, const Value &c,
                                         const LstmParams &p) {
    const Value i = sigmoid(add(linear(p.w_i, x, p.b_i), matmul(p.u_i, h)));
    const Value f = sigmoid(add(linear(p.w_f, x, p.b_f), matmul(p.u_f, h)));
    const Value g = tanh(add(linear(p.w_g, x, p.b_g), matmul(p.u_g, h)));
    const Value o = sigmoid(add(linear(p.w_o, x, p.b_o), matmul(p.u_o, h)));
    const Value c_next = add(mul(f, c), mul(i, g));
    const Value h_next = mul(o, tanh(c_next));
    return {h_next, c_next};
}

} // namespace qdraw::autograd
