#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvqd {

using Complex = std::complex<double>;

/// Dense pure state over 2^N computational basis states.
///
/// Basis index bit q holds qubit q (qubit 0 is the least-significant bit).
class StateVector {
public:
    /// |0...0> on `num_qubits` qubits.
    explicit StateVector(std::size_t num_qubits) : num_qubits_(num_qubits), amps_(dimension_for(num_qubits)) {
        amps_[0] = 1.0;
    }

    StateVector(std::size_t num_qubits, std::vector<Complex> amplitudes)
        : num_qubits_(num_qubits), amps_(std::move(amplitudes)) {
        if (amps_.size() != dimension_for(num_qubits))
            throw std::invalid_argument("StateVector: amplitude count " + std::to_string(amps_.size()) +
                                        " does not match 2^" + std::to_string(num_qubits));
    }

    static StateVector basis(std::size_t num_qubits, std::uint64_t index) {
        StateVector s(num_qubits);
        if (index >= s.dimension()) throw std::out_of_range("StateVector::basis: index out of range");
        s.amps_[0] = 0.0;
        s.amps_[index] = 1.0;
        return s;
    }

    /// Uniform superposition |+...+>.
    static StateVector plus(std::size_t num_qubits) {
        StateVector s(num_qubits);
        const double a = 1.0 / std::sqrt(static_cast<double>(s.dimension()));
        for (auto& x : s.amps_) x = a;
        return s;
    }

    std::size_t num_qubits() const noexcept { return num_qubits_; }
    std::size_t dimension() const noexcept { return amps_.size(); }

    std::span<Complex> amplitudes() noexcept { return amps_; }
    std::span<const Complex> amplitudes() const noexcept { return amps_; }

    Complex& operator[](std::size_t i) { return amps_[i]; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }

    double norm() const {
        double acc = 0.0;
        for (const auto& a : amps_) acc += std::norm(a);
        return std::sqrt(acc);
    }

    void normalize() {
        const double n = norm();
        if (n == 0.0) throw std::domain_error("StateVector::normalize: zero vector");
        for (auto& a : amps_) a /= n;
    }

    /// Probability of measuring each basis state.
    std::vector<double> probabilities() const {
        std::vector<double> p(amps_.size());
        for (std::size_t i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_[i]);
        return p;
    }

private:
    static std::size_t dimension_for(std::size_t num_qubits) {
        if (num_qubits == 0) throw std::invalid_argument("StateVector: need at least one qubit");
        if (num_qubits > 30) throw std::invalid_argument("StateVector: too many qubits for a dense state");
        return std::size_t{1} << num_qubits;
    }

    std::size_t num_qubits_;
    std::vector<Complex> amps_;
};

inline void require_same_size(const StateVector& a, const StateVector& b, const char* where) {
    if (a.num_qubits() != b.num_qubits())
        throw std::invalid_argument(std::string(where) + ": qubit count mismatch (" +
                                    std::to_string(a.num_qubits()) + " vs " + std::to_string(b.num_qubits()) + ")");
}

/// <a|b>, conjugate-linear in `a`.
inline Complex inner_product(const StateVector& a, const StateVector& b) {
    require_same_size(a, b, "inner_product");
    Complex acc = 0.0;
    const auto x = a.amplitudes();
    const auto y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
    return acc;
}

} // namespace pvqd
