#pragma once

#include "pvqd/pauli.hpp"
#include "pvqd/state_vector.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvqd {

enum class GateKind { fixed_pauli, pauli_rotation };

/// One circuit element.
///
/// A rotation applies exp(-i theta/2 G) with theta = angle_scale * params[param_index] when the gate is
/// parameterized, or theta = angle otherwise. A fixed Pauli applies G itself.
struct Gate {
    GateKind kind = GateKind::pauli_rotation;
    PauliString generator;
    std::optional<std::size_t> param_index;
    double angle_scale = 1.0;
    double angle = 0.0;

    static Gate pauli(PauliString g) { return {GateKind::fixed_pauli, g, std::nullopt, 1.0, 0.0}; }
    static Gate fixed_rotation(PauliString g, double theta) {
        return {GateKind::pauli_rotation, g, std::nullopt, 1.0, theta};
    }
    static Gate rotation(PauliString g, std::size_t index, double scale) {
        return {GateKind::pauli_rotation, g, index, scale, 0.0};
    }

    bool parameterized() const noexcept { return param_index.has_value(); }

    double theta(std::span<const double> params) const {
        return param_index ? angle_scale * params[*param_index] : angle;
    }
};

/// Ordered gate list acting on `num_qubits` qubits with `num_params` free parameters.
class Circuit {
public:
    explicit Circuit(std::size_t num_qubits, std::size_t num_params = 0) : num_qubits_(num_qubits), num_params_(num_params) {
        if (num_qubits == 0) throw std::invalid_argument("Circuit: need at least one qubit");
    }

    Circuit& add(Gate g) {
        g.generator.check_fits(num_qubits_);
        if (g.kind == GateKind::fixed_pauli && g.parameterized())
            throw std::invalid_argument("Circuit: a fixed Pauli gate cannot carry a parameter");
        if (g.param_index && *g.param_index >= num_params_)
            throw std::out_of_range("Circuit: param_index " + std::to_string(*g.param_index) + " >= " +
                                    std::to_string(num_params_));
        gates_.push_back(g);
        return *this;
    }

    /// Appends `other`'s gates; its parameters are renumbered after this circuit's.
    Circuit& append(const Circuit& other) {
        if (other.num_qubits_ != num_qubits_) throw std::invalid_argument("Circuit::append: qubit count mismatch");
        const std::size_t offset = num_params_;
        num_params_ += other.num_params_;
        for (Gate g : other.gates_) {
            if (g.param_index) *g.param_index += offset;
            gates_.push_back(g);
        }
        return *this;
    }

    std::size_t num_qubits() const noexcept { return num_qubits_; }
    std::size_t num_params() const noexcept { return num_params_; }
    const std::vector<Gate>& gates() const noexcept { return gates_; }
    std::size_t size() const noexcept { return gates_.size(); }

    /// How many gates each parameter drives.
    std::vector<std::size_t> parameter_usage() const {
        std::vector<std::size_t> uses(num_params_, 0);
        for (const auto& g : gates_)
            if (g.param_index) ++uses[*g.param_index];
        return uses;
    }

    /// Throws unless every parameter in [0, p) drives at least one gate.
    void validate() const {
        const auto uses = parameter_usage();
        for (std::size_t k = 0; k < uses.size(); ++k)
            if (uses[k] == 0) throw std::invalid_argument("Circuit: parameter " + std::to_string(k) + " drives no gate");
    }

    /// Gate driven by parameter k; requires exactly one.
    const Gate& gate_for_param(std::size_t k) const {
        const Gate* found = nullptr;
        for (const auto& g : gates_) {
            if (g.param_index == k) {
                if (found) throw std::logic_error("Circuit: parameter " + std::to_string(k) + " is shared by several gates");
                found = &g;
            }
        }
        if (!found) throw std::out_of_range("Circuit: no gate for parameter " + std::to_string(k));
        return *found;
    }

private:
    std::size_t num_qubits_;
    std::size_t num_params_;
    std::vector<Gate> gates_;
};

inline void apply_gate(const Gate& g, std::span<const double> params, StateVector& state, bool adjoint) {
    if (g.kind == GateKind::fixed_pauli) {
        state = apply_pauli(g.generator, state);
        return;
    }
    const double theta = g.theta(params);
    apply_pauli_rotation(state, g.generator, adjoint ? -theta : theta);
}

/// In place: state <- C(params) state, or C(params)^dagger state when `adjoint`.
inline void apply_circuit_inplace(const Circuit& circuit, std::span<const double> params, StateVector& state,
                                  bool adjoint = false) {
    if (params.size() != circuit.num_params())
        throw std::invalid_argument("apply_circuit: expected " + std::to_string(circuit.num_params()) +
                                    " parameters, got " + std::to_string(params.size()));
    if (state.num_qubits() != circuit.num_qubits())
        throw std::invalid_argument("apply_circuit: circuit and state qubit counts differ");
    const auto& gates = circuit.gates();
    if (!adjoint) {
        for (const auto& g : gates) apply_gate(g, params, state, false);
    } else {
        for (auto it = gates.rbegin(); it != gates.rend(); ++it) apply_gate(*it, params, state, true);
    }
}

inline StateVector apply_circuit(const Circuit& circuit, std::span<const double> params, StateVector state,
                                 bool adjoint = false) {
    apply_circuit_inplace(circuit, params, state, adjoint);
    return state;
}

/// C(params)|0...0>
inline StateVector prepare_state(const Circuit& circuit, std::span<const double> params) {
    return apply_circuit(circuit, params, StateVector(circuit.num_qubits()));
}

enum class AxisScheme { all_x, alternating_xy };

struct AnsatzSpec {
    std::size_t num_qubits = 3;
    std::size_t depth = 3;
    AxisScheme axis_scheme = AxisScheme::alternating_xy;
};

/// Rotation axis of block `layer` (1-based): x on odd layers, y on even ones for the alternating scheme.
inline char ansatz_axis(AxisScheme scheme, std::size_t layer) {
    if (scheme == AxisScheme::all_x) return 'X';
    return (layer % 2 == 1) ? 'X' : 'Y';
}

inline std::size_t ansatz_param_count(const AnsatzSpec& spec) { return spec.depth * (2 * spec.num_qubits - 1); }

/// Hardware-efficient ansatz: d blocks, each a layer of single-qubit rotations exp(-i w sigma^alpha)
/// followed by nearest-neighbour exp(-i w ZZ) gates. Every gate owns one parameter; the gates are stored
/// with angle_scale 2 so that theta = 2w in the exp(-i theta/2 G) convention.
inline Circuit build_ansatz(const AnsatzSpec& spec) {
    if (spec.num_qubits == 0) throw std::invalid_argument("build_ansatz: num_qubits must be >= 1");
    Circuit c(spec.num_qubits, ansatz_param_count(spec));
    std::size_t next = 0;
    for (std::size_t layer = 1; layer <= spec.depth; ++layer) {
        const char axis = ansatz_axis(spec.axis_scheme, layer);
        for (std::size_t i = 0; i < spec.num_qubits; ++i) c.add(Gate::rotation(PauliString::single(i, axis), next++, 2.0));
        for (std::size_t j = 0; j + 1 < spec.num_qubits; ++j)
            c.add(Gate::rotation(PauliString::from_ops({{j, 'Z'}, {j + 1, 'Z'}}), next++, 2.0));
    }
    return c;
}

/// First-order product formula for exp(-iH dt) on the open TFIM chain, split into `substeps` equal pieces.
/// Each piece applies the transverse-field layer, then the ZZ layer left to right, matching one all-x
/// ansatz block with rotation parameters h*dt and coupling parameters J*dt.
inline Circuit build_trotter_step(double coupling, double field, std::size_t num_spins, double dt,
                                  std::size_t substeps = 1) {
    if (substeps == 0) throw std::invalid_argument("build_trotter_step: substeps must be >= 1");
    Circuit c(num_spins);
    const double tau = dt / static_cast<double>(substeps);
    for (std::size_t s = 0; s < substeps; ++s) {
        for (std::size_t i = 0; i < num_spins; ++i) c.add(Gate::fixed_rotation(PauliString::single(i, 'X'), 2.0 * field * tau));
        for (std::size_t j = 0; j + 1 < num_spins; ++j)
            c.add(Gate::fixed_rotation(PauliString::from_ops({{j, 'Z'}, {j + 1, 'Z'}}), 2.0 * coupling * tau));
    }
    return c;
}

/// First-order product formula for an arbitrary Pauli sum, applying terms in stored order.
inline Circuit build_trotter_step(const PauliSumOperator& hamiltonian, std::size_t num_qubits, double dt,
                                  std::size_t substeps = 1) {
    if (substeps == 0) throw std::invalid_argument("build_trotter_step: substeps must be >= 1");
    Circuit c(num_qubits);
    const double tau = dt / static_cast<double>(substeps);
    for (std::size_t s = 0; s < substeps; ++s)
        for (const auto& t : hamiltonian.terms())
            if (!t.string.is_identity()) c.add(Gate::fixed_rotation(t.string, 2.0 * t.coefficient * tau));
    return c;
}

/// Copy of `params` with params[index] += shift (parameter units).
inline std::vector<double> shift_parameter(std::span<const double> params, std::size_t index, double shift) {
    if (index >= params.size())
        throw std::out_of_range("shift_parameter: index " + std::to_string(index) + " >= " + std::to_string(params.size()));
    std::vector<double> out(params.begin(), params.end());
    out[index] += shift;
    return out;
}

} // namespace pvqd
