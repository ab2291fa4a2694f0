#pragma once

#include "pvqd/errors.hpp"
#include "pvqd/pauli.hpp"
#include "pvqd/state_vector.hpp"

#include <Eigen/Dense>

#include <string>

namespace pvqd {

/// Largest register the dense eigendecomposition is allowed to handle.
inline constexpr std::size_t kMaxExactQubits = 14;

using DenseMatrix = Eigen::MatrixXcd;

inline DenseMatrix dense_matrix(const PauliSumOperator& op, std::size_t num_qubits) {
    if (num_qubits > kMaxExactQubits)
        throw CapabilityError("dense operator on " + std::to_string(num_qubits) + " qubits exceeds the limit of " +
                              std::to_string(kMaxExactQubits));
    const std::size_t dim = std::size_t{1} << num_qubits;
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& t : op.terms()) {
        t.string.check_fits(num_qubits);
        for (std::uint64_t b = 0; b < dim; ++b)
            m(static_cast<Eigen::Index>(b ^ t.string.x_mask()), static_cast<Eigen::Index>(b)) +=
                t.coefficient * t.string.phase_on(b);
    }
    return m;
}

/// e^{-iHt} through one eigendecomposition of the dense Hamiltonian; reusable across times.
class ExactPropagator {
public:
    ExactPropagator(const PauliSumOperator& hamiltonian, std::size_t num_qubits) : num_qubits_(num_qubits) {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(dense_matrix(hamiltonian, num_qubits));
        if (solver.info() != Eigen::Success) throw std::runtime_error("ExactPropagator: eigendecomposition failed");
        energies_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
    }

    std::size_t num_qubits() const noexcept { return num_qubits_; }
    const Eigen::VectorXd& energies() const noexcept { return energies_; }

    StateVector propagate(const StateVector& state, double time) const {
        if (state.num_qubits() != num_qubits_)
            throw std::invalid_argument("ExactPropagator: state has the wrong qubit count");
        const auto amps = state.amplitudes();
        const Eigen::Map<const Eigen::VectorXcd> in(amps.data(), static_cast<Eigen::Index>(amps.size()));
        Eigen::VectorXcd coeffs = vectors_.adjoint() * in;
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) coeffs[k] *= std::exp(Complex{0.0, -energies_[k] * time});
        const Eigen::VectorXcd out = vectors_ * coeffs;
        return StateVector(num_qubits_, std::vector<Complex>(out.data(), out.data() + out.size()));
    }

private:
    std::size_t num_qubits_;
    Eigen::VectorXd energies_;
    DenseMatrix vectors_;
};

inline StateVector exact_propagate(const PauliSumOperator& hamiltonian, const StateVector& state, double time) {
    if (state.num_qubits() > kMaxExactQubits)
        throw CapabilityError("exact_propagate: " + std::to_string(state.num_qubits()) +
                              " qubits exceeds the dense limit of " + std::to_string(kMaxExactQubits));
    return ExactPropagator(hamiltonian, state.num_qubits()).propagate(state, time);
}

} // namespace pvqd
