#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdraw::qsim {

using cdouble = std::complex<double>;

/// Dense amplitude vector over the 2^n computational basis states.
/// Bit convention: qubit 0 is the MOST significant bit of the basis index,
/// so for n=2 the basis order is |00>, |01>, |10>, |11> with qubit 0 first.
struct StateVector {
    int n_qubits = 0;
    std::vector<cdouble> amplitudes;

    StateVector() = default;

    /// |0...0> on n qubits.
    explicit StateVector(int n) : n_qubits(n) {
        if (n < 1 || n > 24)
            throw std::invalid_argument("StateVector: n_qubits must be in [1, 24], got " +
                                        std::to_string(n));
        amplitudes.assign(std::size_t{1} << n, cdouble{0.0, 0.0});
        amplitudes[0] = cdouble{1.0, 0.0};
    }

    StateVector(int n, std::vector<cdouble> amps) : n_qubits(n), amplitudes(std::move(amps)) {
        if (amplitudes.size() != (std::size_t{1} << n))
            throw std::invalid_argument("StateVector: amplitude count " +
                                        std::to_string(amplitudes.size()) +
                                        " does not match 2^" + std::to_string(n));
    }

    std::size_t dim() const { return amplitudes.size(); }

    double norm_sq() const {
        double s = 0.0;
        for (const cdouble &a : amplitudes)
            s += std::norm(a);
        return s;
    }

    /// Bit of `qubit` in basis index `k` under the MSB-first convention.
    int bit(int qubit, std::size_t k) const {
        return static_cast<int>((k >> (n_qubits - 1 - qubit)) & 1u);
    }
};

enum class GateKind { RX, RY, RZ, CNOT };

inline bool is_rotation(GateKind k) { return k != GateKind::CNOT; }

inline const char *gate_name(GateKind k) {
    switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

/// Where a rotation angle comes from when a layout is run.
struct ParamSlot {
    enum class Source { Embed, Train };
    Source source = Source::Train;
    int index = 0;
};

struct GateOp {
    GateKind kind = GateKind::RX;
    int target = 0;  // rotation wire, or CNOT target
    int control = -1; // CNOT only
    std::optional<ParamSlot> param_slot;

    static GateOp rotation(GateKind k, int qubit, std::optional<ParamSlot> slot = std::nullopt) {
        if (!is_rotation(k))
            throw std::invalid_argument("GateOp::rotation: CNOT is not a rotation");
        return GateOp{k, qubit, -1, slot};
    }

    static GateOp cnot(int control, int target) {
        if (control == target)
            throw std::invalid_argument("GateOp::cnot: control equals target (" +
                                        std::to_string(control) + ")");
        return GateOp{GateKind::CNOT, target, control, std::nullopt};
    }
};

namespace detail {

inline void check_qubit(int q, int n, const char *what) {
    if (q < 0 || q >= n)
        throw std::out_of_range(std::string(what) + ": qubit " + std::to_string(q) +
                                " out of range for " + std::to_string(n) + " qubits");
}

/// In-place single-qubit unitary [[m00, m01], [m10, m11]] on `qubit`.
inline void apply_1q(std::vector<cdouble> &amps, int n, int qubit, cdouble m00, cdouble m01,
                     cdouble m10, cdouble m11) {
    const std::size_t mask = std::size_t{1} << (n - 1 - qubit);
    const std::size_t dim = amps.size();
    for (std::size_t k = 0; k < dim; ++k) {
        if (k & mask)
            continue;
        const cdouble a0 = amps[k];
        const cdouble a1 = amps[k | mask];
        amps[k] = m00 * a0 + m01 * a1;
        amps[k | mask] = m10 * a0 + m11 * a1;
    }
}

inline void apply_rx(std::vector<cdouble> &amps, int n, int qubit, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    apply_1q(amps, n, qubit, cdouble{c, 0.0}, cdouble{0.0, -s}, cdouble{0.0, -s}, cdouble{c, 0.0});
}

inline void apply_ry(std::vector<cdouble> &amps, int n, int qubit, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    apply_1q(amps, n, qubit, cdouble{c, 0.0}, cdouble{-s, 0.0}, cdouble{s, 0.0}, cdouble{c, 0.0});
}

inline void apply_rz(std::vector<cdouble> &amps, int n, int qubit, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    const cdouble p0{c, -s}; // exp(-i angle/2)
    const cdouble p1{c, s};  // exp(+i angle/2)
    const std::size_t mask = std::size_t{1} << (n - 1 - qubit);
    for (std::size_t k = 0; k < amps.size(); ++k)
        amps[k] *= (k & mask) ? p1 : p0;
}

inline void apply_cnot(std::vector<cdouble> &amps, int n, int control, int target) {
    const std::size_t cmask = std::size_t{1} << (n - 1 - control);
    const std::size_t tmask = std::size_t{1} << (n - 1 - target);
    for (std::size_t k = 0; k < amps.size(); ++k) {
        if ((k & cmask) && !(k & tmask))
            std::swap(amps[k], amps[k | tmask]);
    }
}

inline void apply_gate_in_place(std::vector<cdouble> &amps, int n, const GateOp &gate,
                                std::optional<double> angle) {
    if (is_rotation(gate.kind)) {
        if (!angle)
            throw std::invalid_argument(std::string("apply_gate: ") + gate_name(gate.kind) +
                                        " requires an angle");
        check_qubit(gate.target, n, "apply_gate");
        switch (gate.kind) {
        case GateKind::RX: apply_rx(amps, n, gate.target, *angle); break;
        case GateKind::RY: apply_ry(amps, n, gate.target, *angle); break;
        case GateKind::RZ: apply_rz(amps, n, gate.target, *angle); break;
        default: break;
        }
    } else {
        if (angle)
            throw std::invalid_argument("apply_gate: CNOT takes no angle");
        check_qubit(gate.control, n, "apply_gate");
        check_qubit(gate.target, n, "apply_gate");
        apply_cnot(amps, n, gate.control, gate.target);
    }
}

} // namespace detail

/// Value-semantics gate application: returns the transformed state, input untouched.
inline StateVector apply_gate(const StateVector &state, const GateOp &gate,
                              std::optional<double> angle = std::nullopt) {
    StateVector out = state;
    detail::apply_gate_in_place(out.amplitudes, out.n_qubits, gate, angle);
    return out;
}

/// Born-rule outcome distribution: entry k is |amplitudes[k]|^2.
inline std::vector<double> born_probabilities(const StateVector &state) {
    std::vector<double> p(state.dim());
    for (std::size_t k = 0; k < p.size(); ++k)
        p[k] = std::norm(state.amplitudes[k]);
    return p;
}

struct ObservableZ {
    int qubit = 0;
};

/// <sigma_z on obs.qubit> = sum_k p_k * (+1 if the qubit bit of k is 0 else -1).
/// Deliberately routed through born_probabilities so the Born-consistency
/// property holds with exact arithmetic equality.
inline double expval_z(const StateVector &state, const ObservableZ &obs) {
    detail::check_qubit(obs.qubit, state.n_qubits, "expval_z");
    const std::vector<double> p = born_probabilities(state);
    double e = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        e += state.bit(obs.qubit, k) == 0 ? p[k] : -p[k];
    return e;
}

} // namespace qdraw::qsim
