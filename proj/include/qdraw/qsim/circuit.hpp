#pragma once

#include "qdraw/qsim/statevector.hpp"

#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace qdraw::qsim {

/// Ordered gate program with named parameter slots. EMBED slots carry data
/// angles, TRAIN slots carry trainable angles; each slot index is bound to
/// exactly one rotation.
struct CircuitLayout {
    int n_qubits = 0;
    std::vector<GateOp> gates;
    int n_embed = 0;
    int n_train = 0;
    bool entangling = false;

    void validate() const {
        if (n_qubits < 1)
            throw std::invalid_argument("CircuitLayout: n_qubits must be >= 1");
        std::vector<int> embed_seen(n_embed, 0), train_seen(n_train, 0);
        bool has_cnot = false;
        for (const GateOp &g : gates) {
            if (is_rotation(g.kind)) {
                detail::check_qubit(g.target, n_qubits, "CircuitLayout");
                if (!g.param_slot)
                    throw std::invalid_argument("CircuitLayout: rotation without a param slot");
                const ParamSlot &s = *g.param_slot;
                auto &seen = s.source == ParamSlot::Source::Embed ? embed_seen : train_seen;
                const int count = s.source == ParamSlot::Source::Embed ? n_embed : n_train;
                if (s.index < 0 || s.index >= count)
                    throw std::invalid_argument("CircuitLayout: slot index " +
                                                std::to_string(s.index) + " out of range");
                seen[s.index] += 1;
            } else {
                detail::check_qubit(g.control, n_qubits, "CircuitLayout");
                detail::check_qubit(g.target, n_qubits, "CircuitLayout");
                if (g.param_slot)
                    throw std::invalid_argument("CircuitLayout: CNOT cannot carry a param slot");
                has_cnot = true;
            }
        }
        for (int c : embed_seen)
            if (c != 1)
                throw std::invalid_argument("CircuitLayout: every EMBED slot must bind once");
        for (int c : train_seen)
            if (c != 1)
                throw std::invalid_argument("CircuitLayout: every TRAIN slot must bind once");
        if (entangling != has_cnot)
            throw std::invalid_argument("CircuitLayout: entangling flag does not match gates");
    }
};

/// Hardware-efficient ansatz: an RX data-embedding rotation per qubit, then
/// per layer an (RY, RZ, RY) trainable triple per qubit followed by a linear
/// CNOT chain i -> i+1 when `entangling`.
inline CircuitLayout build_hea(int n_qubits, bool entangling, int n_layers = 1) {
    if (n_qubits < 1)
        throw std::invalid_argument("build_hea: n_qubits must be >= 1, got " +
                                    std::to_string(n_qubits));
    if (n_layers < 1)
        throw std::invalid_argument("build_hea: n_layers must be >= 1");
    CircuitLayout layout;
    layout.n_qubits = n_qubits;
    layout.n_embed = n_qubits;
    layout.n_train = 3 * n_qubits * n_layers;
    for (int q = 0; q < n_qubits; ++q)
        layout.gates.push_back(GateOp::rotation(GateKind::RX, q,
                                                ParamSlot{ParamSlot::Source::Embed, q}));
    int train = 0;
    for (int layer = 0; layer < n_layers; ++layer) {
        for (int q = 0; q < n_qubits; ++q) {
            for (GateKind k : {GateKind::RY, GateKind::RZ, GateKind::RY})
                layout.gates.push_back(
                    GateOp::rotation(k, q, ParamSlot{ParamSlot::Source::Train, train++}));
        }
        if (entangling && n_qubits > 1) {
            for (int q = 0; q + 1 < n_qubits; ++q)
                layout.gates.push_back(GateOp::cnot(q, q + 1));
            layout.entangling = true;
        }
    }
    layout.validate();
    return layout;
}

namespace detail {

inline double resolve_angle(const GateOp &g, const std::vector<double> &embed,
                            const std::vector<double> &theta) {
    const ParamSlot &s = *g.param_slot;
    return s.source == ParamSlot::Source::Embed ? embed[static_cast<std::size_t>(s.index)]
                                                : theta[static_cast<std::size_t>(s.index)];
}

inline void check_lengths(const CircuitLayout &layout, const std::vector<double> &embed,
                          const std::vector<double> &theta) {
    if (embed.size() != static_cast<std::size_t>(layout.n_embed))
        throw std::invalid_argument("run_circuit: embed length " + std::to_string(embed.size()) +
                                    " != n_embed " + std::to_string(layout.n_embed));
    if (theta.size() != static_cast<std::size_t>(layout.n_train))
        throw std::invalid_argument("run_circuit: theta length " + std::to_string(theta.size()) +
                                    " != n_train " + std::to_string(layout.n_train));
}

} // namespace detail

/// Exact statevector pass: prepare |0...0>, run the program, return
/// (<sigma_z^(0)>, ..., <sigma_z^(n-1)>). No shot sampling.
inline std::vector<double> run_circuit(const CircuitLayout &layout,
                                       const std::vector<double> &embed,
                                       const std::vector<double> &theta) {
    detail::check_lengths(layout, embed, theta);
    StateVector state(layout.n_qubits);
    for (const GateOp &g : layout.gates) {
        if (is_rotation(g.kind))
            detail::apply_gate_in_place(state.amplitudes, state.n_qubits, g,
                                        detail::resolve_angle(g, embed, theta));
        else
            detail::apply_gate_in_place(state.amplitudes, state.n_qubits, g, std::nullopt);
    }
    std::vector<double> out(static_cast<std::size_t>(layout.n_qubits));
    for (int q = 0; q < layout.n_qubits; ++q)
        out[static_cast<std::size_t>(q)] = expval_z(state, ObservableZ{q});
    return out;
}

/// Jacobians of every circuit output wire with respect to every slot.
/// wrt_embed[w][i] = d<sigma_z^(w)> / d embed[i]; wrt_theta likewise.
struct ShiftJacobians {
    std::vector<std::vector<double>> wrt_embed;
    std::vector<std::vector<double>> wrt_theta;
};

/// Two-point parameter-shift rule: every slot feeds a rotation with +-1/2
/// generator eigenvalues, so d f / d slot = (f(slot + pi/2) - f(slot - pi/2)) / 2
/// exactly. Costs two circuit runs per slot. Passing include_theta = false
/// skips the TRAIN columns (left at zero) for consumers with frozen theta.
inline ShiftJacobians param_shift_grad(const CircuitLayout &layout,
                                       const std::vector<double> &embed,
                                       const std::vector<double> &theta,
                                       bool include_theta = true) {
    detail::check_lengths(layout, embed, theta);
    const double shift = std::numbers::pi / 2.0;
    const std::size_t n_out = static_cast<std::size_t>(layout.n_qubits);
    ShiftJacobians jac;
    jac.wrt_embed.assign(n_out, std::vector<double>(embed.size(), 0.0));
    jac.wrt_theta.assign(n_out, std::vector<double>(theta.size(), 0.0));

    std::vector<double> e = embed;
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = embed[i] + shift;
        const std::vector<double> plus = run_circuit(layout, e, theta);
        e[i] = embed[i] - shift;
        const std::vector<double> minus = run_circuit(layout, e, theta);
        e[i] = embed[i];
        for (std::size_t w = 0; w < n_out; ++w)
            jac.wrt_embed[w][i] = 0.5 * (plus[w] - minus[w]);
    }
    if (!include_theta)
        return jac;
    std::vector<double> t = theta;
    for (std::size_t j = 0; j < t.size(); ++j) {
        t[j] = theta[j] + shift;
        const std::vector<double> plus = run_circuit(layout, embed, t);
        t[j] = theta[j] - shift;
        const std::vector<double> minus = run_circuit(layout, embed, t);
        t[j] = theta[j];
        for (std::size_t w = 0; w < n_out; ++w)
            jac.wrt_theta[w][j] = 0.5 * (plus[w] - minus[w]);
    }
    return jac;
}

/// Line-oriented debug listing, one gate per line, for test fixtures.
inline std::string layout_to_text(const CircuitLayout &layout) {
    std::ostringstream os;
    os << "qubits " << layout.n_qubits << "\n";
    os << "embed " << layout.n_embed << "\n";
    os << "train " << layout.n_train << "\n";
    os << "entangling " << (layout.entangling ? 1 : 0) << "\n";
    for (const GateOp &g : layout.gates) {
        if (is_rotation(g.kind)) {
            os << gate_name(g.kind) << " q" << g.target;
            if (g.param_slot)
                os << (g.param_slot->source == ParamSlot::Source::Embed ? " embed" : " train")
                   << g.param_slot->index;
            os << "\n";
        } else {
            os << "CNOT q" << g.control << " q" << g.target << "\n";
        }
    }
    return os.str();
}

} // namespace qdraw::qsim
