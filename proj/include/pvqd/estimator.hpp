#pragma once

#include "pvqd/circuit.hpp"
#include "pvqd/sampling.hpp"
#include "pvqd/state_vector.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvqd {

enum class LossKind { global, local };

/// Exact statevector readout, or `n_shots` computational-basis samples per circuit evaluation.
struct MeasurementMode {
    std::uint64_t n_shots = 0; // 0 means statevector
    std::uint64_t seed = 0;

    static MeasurementMode statevector() { return {}; }
    static MeasurementMode shots(std::uint64_t n, std::uint64_t seed) {
        if (n == 0) throw std::invalid_argument("MeasurementMode::shots: n_shots must be >= 1");
        return {n, seed};
    }

    bool is_shots() const noexcept { return n_shots > 0; }
};

/// Running totals of circuit evaluations and measurement samples.
///
/// Increments are atomic. `reserve` hands out a contiguous block of evaluation indices, which double as
/// shot-noise substream ids so sampled values do not depend on evaluation order.
class SampleCounter {
public:
    SampleCounter() = default;
    SampleCounter(const SampleCounter& other)
        : samples_(other.total_samples()), evaluations_(other.circuit_evaluations()) {}
    SampleCounter& operator=(const SampleCounter& other) {
        samples_.store(other.total_samples());
        evaluations_.store(other.circuit_evaluations());
        return *this;
    }

    std::uint64_t total_samples() const noexcept { return samples_.load(); }
    std::uint64_t circuit_evaluations() const noexcept { return evaluations_.load(); }

    /// Records `count` evaluations of `shots_each` samples; returns the first evaluation index.
    std::uint64_t reserve(std::uint64_t count, std::uint64_t shots_each) {
        samples_.fetch_add(count * shots_each);
        return evaluations_.fetch_add(count);
    }

private:
    std::atomic<std::uint64_t> samples_{0};
    std::atomic<std::uint64_t> evaluations_{0};
};

/// (C(w+dw))^dagger T C(w) |0...0>. Its all-zeros probability is |<psi_{w+dw}|T|psi_w>|^2.
inline StateVector echo_state(const Circuit& ansatz, std::span<const double> w, std::span<const double> dw,
                              const Circuit& trotter) {
    if (w.size() != ansatz.num_params() || dw.size() != ansatz.num_params())
        throw std::invalid_argument("echo_state: parameter vectors must have length " + std::to_string(ansatz.num_params()));
    if (trotter.num_qubits() != ansatz.num_qubits()) throw std::invalid_argument("echo_state: trotter/ansatz qubit mismatch");
    StateVector s = prepare_state(ansatz, w);
    apply_circuit_inplace(trotter, {}, s);
    std::vector<double> shifted(w.begin(), w.end());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += dw[i];
    apply_circuit_inplace(ansatz, shifted, s, true);
    return s;
}

namespace detail {

inline void require_positive_dt(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("eval_loss: dt must be > 0 (got " + std::to_string(dt) + ")");
}

/// Infidelity numerator 1 - P(all zeros) (global) or 1 - mean_j P(q_j = 0) (local) from exact amplitudes.
/// Summed over the complement so small values keep full relative precision.
inline double exact_cost(const StateVector& echo, LossKind kind) {
    const auto a = echo.amplitudes();
    double acc = 0.0;
    if (kind == LossKind::global) {
        for (std::size_t b = 1; b < a.size(); ++b) acc += std::norm(a[b]);
        return acc;
    }
    for (std::size_t b = 1; b < a.size(); ++b) acc += std::norm(a[b]) * std::popcount(static_cast<std::uint64_t>(b));
    return acc / static_cast<double>(echo.num_qubits());
}

inline double sampled_cost(const StateVector& echo, LossKind kind, std::uint64_t n_shots, Rng& rng) {
    const Histogram hist = sample_bitstrings(echo, n_shots, rng);
    const auto n = static_cast<double>(n_shots);
    if (kind == LossKind::global) {
        const auto it = hist.find(0);
        const double zeros = it == hist.end() ? 0.0 : static_cast<double>(it->second);
        return (n - zeros) / n;
    }
    // one sample set serves every single-qubit marginal
    double ones = 0.0;
    for (const auto& [b, count] : hist) ones += static_cast<double>(count) * std::popcount(b);
    return ones / (n * static_cast<double>(echo.num_qubits()));
}

inline double cost(const StateVector& echo, LossKind kind, const MeasurementMode& mode, std::uint64_t eval_index) {
    if (!mode.is_shots()) return exact_cost(echo, kind);
    Rng rng = substream(mode.seed, eval_index);
    return sampled_cost(echo, kind, mode.n_shots, rng);
}

} // namespace detail

/// Step-infidelity from an echo state: (1 - overlap estimate) / dt^2. Counts one circuit evaluation.
inline double eval_loss(const StateVector& echo, LossKind kind, const MeasurementMode& mode, double dt,
                        SampleCounter& counter) {
    detail::require_positive_dt(dt);
    const std::uint64_t index = counter.reserve(1, mode.n_shots);
    return detail::cost(echo, kind, mode, index) / (dt * dt);
}

/// Step-infidelity L(dw, dt) for a fixed base point w and one Trotter step.
///
/// The Trotter-evolved reference T C(w)|0> is computed once; each evaluation then only runs the
/// adjoint ansatz at w + dw.
class StepInfidelity {
public:
    StepInfidelity(const Circuit& ansatz, std::vector<double> w, const Circuit& trotter, double dt, LossKind kind)
        : ansatz_(&ansatz), w_(std::move(w)), reference_(ansatz.num_qubits()), dt_(dt), kind_(kind) {
        detail::require_positive_dt(dt);
        if (w_.size() != ansatz.num_params())
            throw std::invalid_argument("StepInfidelity: w must have length " + std::to_string(ansatz.num_params()));
        reference_ = prepare_state(ansatz, w_);
        apply_circuit_inplace(trotter, {}, reference_);
    }

    std::size_t num_params() const noexcept { return w_.size(); }
    double dt() const noexcept { return dt_; }
    LossKind kind() const noexcept { return kind_; }
    const std::vector<double>& base_params() const noexcept { return w_; }
    const Circuit& ansatz() const noexcept { return *ansatz_; }

    /// T C(w)|0>
    const StateVector& reference() const noexcept { return reference_; }

    StateVector echo(std::span<const double> dw) const {
        check_dw(dw);
        std::vector<double> shifted = w_;
        for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += dw[i];
        return apply_circuit(*ansatz_, shifted, reference_, true);
    }

    double loss(std::span<const double> dw, const MeasurementMode& mode, SampleCounter& counter) const {
        const std::uint64_t index = counter.reserve(1, mode.n_shots);
        return detail::cost(echo(dw), kind_, mode, index) / (dt_ * dt_);
    }

    /// 1 - |<T psi_w | psi_{w+dw}>|^2, evaluated exactly and without the 1/dt^2 factor.
    double infidelity(std::span<const double> dw) const { return detail::exact_cost(echo(dw), LossKind::global); }

    /// Parameter-shift gradient of L with respect to dw; exactly 2p circuit evaluations.
    ///
    /// `shift` is an angle in the exp(-i theta/2 G) convention. For a gate with theta = a * w the
    /// parameter moves by shift / a and the difference quotient is rescaled by a.
    std::vector<double> gradient(std::span<const double> dw, const MeasurementMode& mode, SampleCounter& counter,
                                 double shift = std::numbers::pi / 2) const {
        check_dw(dw);
        const double denom = 2.0 * std::sin(shift);
        if (!(shift > 0.0 && shift < std::numbers::pi) || std::abs(denom) < 1e-12)
            throw std::invalid_argument("loss_gradient: shift must lie in (0, pi) with sin(shift) != 0");
        const std::size_t p = num_params();
        const std::uint64_t base = counter.reserve(2 * p, mode.n_shots);
        std::vector<double> grad(p);
        std::vector<double> probe(dw.begin(), dw.end());
        for (std::size_t i = 0; i < p; ++i) {
            const double scale = ansatz_->gate_for_param(i).angle_scale;
            const double step = shift / scale;
            probe[i] = dw[i] + step;
            const double plus = detail::cost(echo(probe), kind_, mode, base + 2 * i);
            probe[i] = dw[i] - step;
            const double minus = detail::cost(echo(probe), kind_, mode, base + 2 * i + 1);
            probe[i] = dw[i];
            grad[i] = scale * (plus - minus) / (denom * dt_ * dt_);
        }
        return grad;
    }

private:
    void check_dw(std::span<const double> dw) const {
        if (dw.size() != w_.size())
            throw std::invalid_argument("StepInfidelity: dw must have length " + std::to_string(w_.size()));
    }

    const Circuit* ansatz_;
    std::vector<double> w_;
    StateVector reference_;
    double dt_;
    LossKind kind_;
};

inline std::vector<double> loss_gradient(const Circuit& ansatz, std::span<const double> w, std::span<const double> dw,
                                         double dt, const Circuit& trotter, LossKind kind, const MeasurementMode& mode,
                                         double shift, SampleCounter& counter) {
    const StepInfidelity problem(ansatz, std::vector<double>(w.begin(), w.end()), trotter, dt, kind);
    return problem.gradient(dw, mode, counter, shift);
}

} // namespace pvqd
