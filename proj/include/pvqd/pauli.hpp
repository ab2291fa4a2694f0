#pragma once

#include "pvqd/state_vector.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pvqd {

/// Tensor product of single-qubit Paulis, stored as X and Z bit masks (Y sets both).
///
/// Acting on a basis state: P|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>, i.e. P = i^{#Y} X^x Z^z.
class PauliString {
public:
    PauliString() = default;

    /// Label characters address qubits in order: label[q] acts on qubit q. '_' is accepted for I.
    static PauliString from_label(std::string_view label) {
        PauliString p;
        for (std::size_t q = 0; q < label.size(); ++q) p.set(q, label[q]);
        return p;
    }

    /// Sparse form, e.g. {{0, 'Z'}, {1, 'Z'}}.
    static PauliString from_ops(std::initializer_list<std::pair<std::size_t, char>> ops) {
        PauliString p;
        for (const auto& [q, op] : ops) p.set(q, op);
        return p;
    }

    static PauliString single(std::size_t qubit, char op) { return from_ops({{qubit, op}}); }

    void set(std::size_t qubit, char op) {
        if (qubit >= 64) throw std::out_of_range("PauliString: qubit index beyond 63");
        const std::uint64_t bit = std::uint64_t{1} << qubit;
        x_ &= ~bit;
        z_ &= ~bit;
        switch (op) {
        case 'I': case 'i': case '_': break;
        case 'X': case 'x': x_ |= bit; break;
        case 'Z': case 'z': z_ |= bit; break;
        case 'Y': case 'y': x_ |= bit; z_ |= bit; break;
        default: throw std::invalid_argument(std::string("PauliString: unknown label '") + op + "'");
        }
    }

    char op(std::size_t qubit) const {
        if (qubit >= 64) return 'I';
        const bool xb = (x_ >> qubit) & 1U;
        const bool zb = (z_ >> qubit) & 1U;
        if (xb && zb) return 'Y';
        if (xb) return 'X';
        if (zb) return 'Z';
        return 'I';
    }

    std::uint64_t x_mask() const noexcept { return x_; }
    std::uint64_t z_mask() const noexcept { return z_; }

    std::vector<std::size_t> support() const {
        std::vector<std::size_t> qs;
        for (std::uint64_t m = x_ | z_; m != 0; m &= m - 1) qs.push_back(static_cast<std::size_t>(std::countr_zero(m)));
        return qs;
    }

    bool is_identity() const noexcept { return (x_ | z_) == 0; }

    /// Number of qubits needed to hold the string (highest support index + 1).
    std::size_t min_qubits() const noexcept {
        const std::uint64_t m = x_ | z_;
        return m == 0 ? 0 : static_cast<std::size_t>(64 - std::countl_zero(m));
    }

    std::string label(std::size_t num_qubits) const {
        std::string s(num_qubits, 'I');
        for (std::size_t q = 0; q < num_qubits; ++q) s[q] = op(q);
        return s;
    }

    /// i^{#Y}
    Complex y_phase() const {
        switch (std::popcount(x_ & z_) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
        }
    }

    /// Coefficient c such that P|b> = c |b ^ x>.
    Complex phase_on(std::uint64_t basis) const {
        const Complex c = y_phase();
        return (std::popcount(basis & z_) & 1) ? -c : c;
    }

    void check_fits(std::size_t num_qubits) const {
        if (min_qubits() > num_qubits)
            throw std::out_of_range("Pauli string acts on qubit " + std::to_string(min_qubits() - 1) +
                                    " but the state has " + std::to_string(num_qubits) + " qubits");
    }

    friend bool operator==(const PauliString&, const PauliString&) = default;

private:
    std::uint64_t x_ = 0;
    std::uint64_t z_ = 0;
};

/// Returns P|state>.
inline StateVector apply_pauli(const PauliString& p, const StateVector& state) {
    p.check_fits(state.num_qubits());
    StateVector out(state.num_qubits());
    const auto in = state.amplitudes();
    auto res = out.amplitudes();
    const std::uint64_t x = p.x_mask();
    for (std::uint64_t b = 0; b < in.size(); ++b) res[b ^ x] = p.phase_on(b) * in[b];
    return out;
}

/// In place: state <- exp(-i theta/2 G) state = cos(theta/2) state - i sin(theta/2) G state.
inline void apply_pauli_rotation(StateVector& state, const PauliString& generator, double theta) {
    generator.check_fits(state.num_qubits());
    auto a = state.amplitudes();
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const std::uint64_t x = generator.x_mask();
    const Complex minus_i_s{0.0, -s};

    if (x == 0) {
        // diagonal: G|b> = +-|b>
        const Complex plus{c, -s};
        const Complex minus{c, s};
        for (std::uint64_t b = 0; b < a.size(); ++b) a[b] *= (std::popcount(b & generator.z_mask()) & 1) ? minus : plus;
        return;
    }
    for (std::uint64_t b = 0; b < a.size(); ++b) {
        const std::uint64_t partner = b ^ x;
        if (partner < b) continue;
        const Complex ab = a[b];
        const Complex ap = a[partner];
        // (G psi)[partner] = phase(b) psi[b], (G psi)[b] = phase(partner) psi[partner]
        a[b] = c * ab + minus_i_s * generator.phase_on(partner) * ap;
        a[partner] = c * ap + minus_i_s * generator.phase_on(b) * ab;
    }
}

/// Value-returning form of the rotation.
inline StateVector rotated(StateVector state, const PauliString& generator, double theta) {
    apply_pauli_rotation(state, generator, theta);
    return state;
}

struct PauliTerm {
    double coefficient;
    PauliString string;
};

/// Real-weighted sum of Pauli strings (Hermitian by construction).
class PauliSumOperator {
public:
    PauliSumOperator() = default;
    explicit PauliSumOperator(std::vector<PauliTerm> terms) : terms_(std::move(terms)) {}

    PauliSumOperator& add(double coefficient, PauliString string) {
        terms_.push_back({coefficient, string});
        return *this;
    }

    const std::vector<PauliTerm>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    std::size_t min_qubits() const noexcept {
        std::size_t n = 0;
        for (const auto& t : terms_) n = std::max(n, t.string.min_qubits());
        return n;
    }

    /// O|state>
    StateVector apply(const StateVector& state) const {
        std::vector<Complex> acc(state.dimension());
        const auto in = state.amplitudes();
        for (const auto& t : terms_) {
            t.string.check_fits(state.num_qubits());
            const std::uint64_t x = t.string.x_mask();
            for (std::uint64_t b = 0; b < in.size(); ++b) acc[b ^ x] += t.coefficient * t.string.phase_on(b) * in[b];
        }
        return StateVector(state.num_qubits(), std::move(acc));
    }

private:
    std::vector<PauliTerm> terms_;
};

/// <psi|P|psi> for a single string, complex so callers can inspect the residual.
inline Complex pauli_expectation(const PauliString& p, const StateVector& state) {
    p.check_fits(state.num_qubits());
    const auto a = state.amplitudes();
    const std::uint64_t x = p.x_mask();
    Complex acc = 0.0;
    for (std::uint64_t b = 0; b < a.size(); ++b) acc += std::conj(a[b ^ x]) * p.phase_on(b) * a[b];
    return acc;
}

/// Re <psi|O|psi>.
inline double expectation(const PauliSumOperator& op, const StateVector& state) {
    Complex acc = 0.0;
    for (const auto& t : op.terms()) acc += t.coefficient * pauli_expectation(t.string, state);
    return acc.real();
}

/// <O^2> - <O>^2, using ||O psi||^2 for <O^2>.
inline double variance(const PauliSumOperator& op, const StateVector& state) {
    const StateVector o_psi = op.apply(state);
    const double second = o_psi.norm() * o_psi.norm();
    const double first = inner_product(state, o_psi).real();
    return second - first * first;
}

/// Open-chain transverse-field Ising model J sum Z_i Z_{i+1} + h sum X_i with N field terms.
inline PauliSumOperator tfim_hamiltonian(double coupling, double field, std::size_t num_spins) {
    PauliSumOperator h;
    for (std::size_t i = 0; i + 1 < num_spins; ++i) h.add(coupling, PauliString::from_ops({{i, 'Z'}, {i + 1, 'Z'}}));
    for (std::size_t i = 0; i < num_spins; ++i) h.add(field, PauliString::single(i, 'X'));
    return h;
}

/// sum_i sigma^axis_i
inline PauliSumOperator total_magnetization(char axis, std::size_t num_spins) {
    PauliSumOperator m;
    for (std::size_t i = 0; i < num_spins; ++i) m.add(1.0, PauliString::single(i, axis));
    return m;
}

} // namespace pvqd
