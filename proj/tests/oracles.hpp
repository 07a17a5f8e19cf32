// Test-only oracles, kept independent of the library implementation paths
// they are used to check.
#pragma once

#include "qdraw/qsim/circuit.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracles {

using qdraw::qsim::CircuitLayout;
using qdraw::qsim::GateKind;
using qdraw::qsim::GateOp;
using qdraw::qsim::ParamSlot;

using cd = std::complex<double>;
using Mat2 = std::array<cd, 4>; // row-major [m00 m01; m10 m11]

inline Mat2 mat_rx(double a) {
    const cd i{0.0, 1.0};
    const double c = std::cos(a / 2.0), s = std::sin(a / 2.0);
    // cos(a/2) I - i sin(a/2) X
    return {cd{c, 0}, -i * s, -i * s, cd{c, 0}};
}

inline Mat2 mat_ry(double a) {
    const double c = std::cos(a / 2.0), s = std::sin(a / 2.0);
    return {cd{c, 0}, cd{-s, 0}, cd{s, 0}, cd{c, 0}};
}

inline Mat2 mat_rz(double a) {
    const double c = std::cos(a / 2.0), s = std::sin(a / 2.0);
    return {cd{c, -s}, cd{0, 0}, cd{0, 0}, cd{c, s}};
}

/// Two-dimensional single-qubit simulation: amplitudes evolved by explicit
/// 2x2 matrix products. The tensor-free oracle for separable circuits.
struct OneQubit {
    cd a0{1.0, 0.0};
    cd a1{0.0, 0.0};

    void apply(const Mat2 &m) {
        const cd b0 = m[0] * a0 + m[1] * a1;
        const cd b1 = m[2] * a0 + m[3] * a1;
        a0 = b0;
        a1 = b1;
    }

    double expval_z() const { return std::norm(a0) - std::norm(a1); }
};

/// Runs a CNOT-free layout as n independent 2-dimensional simulations.
inline std::vector<double> separable_run(const CircuitLayout &layout,
                                         const std::vector<double> &embed,
                                         const std::vector<double> &theta) {
    std::vector<OneQubit> wires(static_cast<std::size_t>(layout.n_qubits));
    for (const GateOp &g : layout.gates) {
        const double angle = g.param_slot->source == ParamSlot::Source::Embed
                                 ? embed[static_cast<std::size_t>(g.param_slot->index)]
                                 : theta[static_cast<std::size_t>(g.param_slot->index)];
        Mat2 m{};
        switch (g.kind) {
        case GateKind::RX: m = mat_rx(angle); break;
        case GateKind::RY: m = mat_ry(angle); break;
        case GateKind::RZ: m = mat_rz(angle); break;
        case GateKind::CNOT: throw std::logic_error("separable_run: CNOT in layout");
        }
        wires[static_cast<std::size_t>(g.target)].apply(m);
    }
    std::vector<double> out(wires.size());
    for (std::size_t q = 0; q < wires.size(); ++q)
        out[q] = wires[q].expval_z();
    return out;
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)> &f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Central finite differences of every circuit output with respect to one slot.
inline std::vector<double> circuit_fd(const CircuitLayout &layout, std::vector<double> embed,
                                      std::vector<double> theta, bool is_embed, std::size_t slot,
                                      double h = 1e-5) {
    std::vector<double> &v = is_embed ? embed : theta;
    const double x = v[slot];
    v[slot] = x + h;
    std::vector<double> plus = qdraw::qsim::run_circuit(layout, embed, theta);
    v[slot] = x - h;
    std::vector<double> minus = qdraw::qsim::run_circuit(layout, embed, theta);
    for (std::size_t w = 0; w < plus.size(); ++w)
        plus[w] = (plus[w] - minus[w]) / (2.0 * h);
    return plus;
}

} // namespace oracles
