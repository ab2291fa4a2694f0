#pragma once

#include "pvqd/circuit.hpp"
#include "pvqd/errors.hpp"
#include "pvqd/estimator.hpp"
#include "pvqd/exact.hpp"
#include "pvqd/metrics.hpp"
#include "pvqd/pvqd_driver.hpp"
#include "pvqd/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// McLachlan baseline: Re[G] wdot = rhs, integrated with explicit Euler.
namespace pvqd::tdva {

using QgtMatrix = Eigen::MatrixXd;
using McLachlanRhs = Eigen::VectorXd;

struct TdvaConfig {
    double dt = 0.05;
    std::size_t n_steps = 60;
    double rcond = 1e-2;
    MeasurementMode mode = MeasurementMode::statevector();

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("TdvaConfig: dt must be > 0");
        if (!(rcond > 0.0)) throw std::invalid_argument("TdvaConfig: rcond must be > 0");
    }
};

/// |d psi_w / d w_k>, exact through the shifted-state difference for an involutory generator.
///
/// For theta = a w the angle shift pi gives d/dw = a (psi(theta + pi) - psi(theta - pi)) / 4; with a = 2
/// this is (psi(w + pi/2) - psi(w - pi/2)) / (2 sin(pi/2)).
inline StateVector derivative_state(const Circuit& ansatz, std::span<const double> w, std::size_t k) {
    if (k >= ansatz.num_params())
        throw std::out_of_range("derivative_state: index " + std::to_string(k) + " >= " + std::to_string(ansatz.num_params()));
    const double scale = ansatz.gate_for_param(k).angle_scale;
    const double step = std::numbers::pi / scale;
    StateVector plus = prepare_state(ansatz, shift_parameter(w, k, step));
    const StateVector minus = prepare_state(ansatz, shift_parameter(w, k, -step));
    auto a = plus.amplitudes();
    const auto b = minus.amplitudes();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.25 * scale * (a[i] - b[i]);
    return plus;
}

/// Bound |<d_k psi| A |psi>| <= a_k / 2 used to map overlaps onto [-1, 1] for the shot-noise model.
inline double derivative_scale(const Circuit& ansatz, std::size_t k) { return 0.5 * ansatz.gate_for_param(k).angle_scale; }

namespace detail {

/// Draws the shot-noise estimate of an expectation value in [-1, 1], or passes it through.
class Estimates {
public:
    Estimates(const MeasurementMode& mode, SampleCounter& counter, std::uint64_t count)
        : mode_(mode), base_(counter.reserve(count, mode.n_shots)) {}

    double operator()(double exact) {
        const std::uint64_t index = base_ + next_++;
        if (!mode_.is_shots()) return exact;
        Rng rng = substream(mode_.seed, index);
        return sample_pm1_mean(exact, mode_.n_shots, rng);
    }

private:
    const MeasurementMode& mode_;
    std::uint64_t base_;
    std::uint64_t next_ = 0;
};

inline std::vector<StateVector> derivative_states(const Circuit& ansatz, std::span<const double> w) {
    std::vector<StateVector> d;
    d.reserve(ansatz.num_params());
    for (std::size_t k = 0; k < ansatz.num_params(); ++k) d.push_back(derivative_state(ansatz, w, k));
    return d;
}

} // namespace detail

/// Circuit evaluations `assemble_qgt` charges: one per independent entry plus two per <d_k psi|psi>.
constexpr std::uint64_t qgt_circuit_count(std::uint64_t p) { return p * (p + 1) / 2 + 2 * p; }

/// Circuit evaluations `assemble_rhs` charges for a Hamiltonian with `terms` Pauli strings.
constexpr std::uint64_t rhs_circuit_count(std::uint64_t p, std::uint64_t terms) { return p * terms + terms + p; }

/// Real part of the quantum geometric tensor,
/// G_kj = Re[<d_k|d_j> - <d_k|psi><psi|d_j>].
///
/// With a_k/2 = c_k, write Re<d_k|d_j> = c_k c_j v_kj and <d_k|psi> = i c_k u_k with v, u in [-1, 1].
/// In shot mode each v_kj (k <= j) is replaced by a mean of n_s +-1 draws, and u is estimated twice
/// independently so the product term u_k u_j stays unbiased on the diagonal too.
inline QgtMatrix assemble_qgt(const Circuit& ansatz, std::span<const double> w, const MeasurementMode& mode,
                              SampleCounter& counter) {
    const std::size_t p = ansatz.num_params();
    const StateVector psi = prepare_state(ansatz, w);
    const auto d = detail::derivative_states(ansatz, w);
    std::vector<double> c(p);
    for (std::size_t k = 0; k < p; ++k) c[k] = derivative_scale(ansatz, k);

    detail::Estimates estimate(mode, counter, qgt_circuit_count(p));
    std::vector<double> u(p), u_twin(p);
    for (std::size_t k = 0; k < p; ++k) {
        const double exact = inner_product(d[k], psi).imag() / c[k];
        u[k] = estimate(exact);
        u_twin[k] = estimate(exact);
    }

    QgtMatrix g(p, p);
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = k; j < p; ++j) {
            const double v = estimate(inner_product(d[k], d[j]).real() / (c[k] * c[j]));
            const double product = 0.5 * (u[k] * u_twin[j] + u_twin[k] * u[j]);
            const double entry = c[k] * c[j] * (v - product);
            g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = entry;
            g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = entry;
        }
    }
    return g;
}

/// Right-hand side Im<d_k|H|psi> + i <H> <d_k|psi> (real, since <d_k|psi> is imaginary).
///
/// Shot mode perturbs Im<d_k|P_t|psi> / c_k per Pauli term, each <P_t>, and each u_k.
inline McLachlanRhs assemble_rhs(const Circuit& ansatz, std::span<const double> w, const PauliSumOperator& hamiltonian,
                                 const MeasurementMode& mode, SampleCounter& counter) {
    const std::size_t p = ansatz.num_params();
    const StateVector psi = prepare_state(ansatz, w);
    const auto d = detail::derivative_states(ansatz, w);
    const auto& terms = hamiltonian.terms();
    detail::Estimates estimate(mode, counter, rhs_circuit_count(p, terms.size()));

    std::vector<StateVector> p_psi;
    p_psi.reserve(terms.size());
    for (const auto& t : terms) p_psi.push_back(apply_pauli(t.string, psi));

    double energy = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) energy += terms[t].coefficient * estimate(inner_product(psi, p_psi[t]).real());

    McLachlanRhs rhs(p);
    for (std::size_t k = 0; k < p; ++k) {
        const double c = derivative_scale(ansatz, k);
        double im_h = 0.0;
        for (std::size_t t = 0; t < terms.size(); ++t)
            im_h += terms[t].coefficient * c * estimate(inner_product(d[k], p_psi[t]).imag() / c);
        const double u = estimate(inner_product(d[k], psi).imag() / c);
        // i <H> <d_k|psi> = i <H> (i c u) = -<H> c u
        rhs[static_cast<Eigen::Index>(k)] = im_h - energy * c * u;
    }
    return rhs;
}

/// Minimum-norm least-squares solution of G x = rhs, dropping singular values below rcond * s_max.
inline Eigen::VectorXd solve_update(const QgtMatrix& g, const McLachlanRhs& rhs, double rcond) {
    if (g.rows() != g.cols() || g.rows() != rhs.size()) throw std::invalid_argument("solve_update: dimension mismatch");
    if (!(rcond > 0.0)) throw std::invalid_argument("solve_update: rcond must be > 0");
    if (g.size() == 0) return Eigen::VectorXd(0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = rcond * sigma[0];
    if (!(sigma[0] > 0.0) || !std::isfinite(sigma[0]))
        throw DegenerateTangentSpaceError("solve_update: every singular value is below the cutoff");
    Eigen::VectorXd projected = svd.matrixU().transpose() * rhs;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) projected[i] = sigma[i] >= cutoff ? projected[i] / sigma[i] : 0.0;
    return svd.matrixV() * projected;
}

/// Explicit-Euler integration w <- w + dt * wdot.
inline std::vector<TrajectoryRecord> run(const PauliSumOperator& hamiltonian, const Circuit& ansatz,
                                         std::span<const double> w0, const TdvaConfig& config,
                                         SampleCounter* counter_out = nullptr) {
    config.validate();
    const std::size_t p = ansatz.num_params();
    if (w0.size() != p) throw std::invalid_argument("tdva::run: w0 must have length " + std::to_string(p));
    ansatz.validate();

    std::vector<TrajectoryRecord> records;
    if (config.n_steps == 0) return records;
    records.reserve(config.n_steps);

    const ExactPropagator exact(hamiltonian, ansatz.num_qubits());
    const StateVector initial = prepare_state(ansatz, w0);
    SampleCounter local_counter;
    SampleCounter& counter = counter_out ? *counter_out : local_counter;
    std::vector<double> w(w0.begin(), w0.end());

    for (std::size_t k = 0; k < config.n_steps; ++k) {
        const QgtMatrix g = assemble_qgt(ansatz, w, config.mode, counter);
        const McLachlanRhs rhs = assemble_rhs(ansatz, w, hamiltonian, config.mode, counter);
        const Eigen::VectorXd wdot = solve_update(g, rhs, config.rcond);
        for (std::size_t i = 0; i < p; ++i) {
            const double v = wdot[static_cast<Eigen::Index>(i)];
            if (!std::isfinite(v)) throw NumericalError("non-finite parameter velocity", k, 0, v);
            w[i] += config.dt * v;
        }
        const double t = static_cast<double>(k + 1) * config.dt;
        TrajectoryRecord r = make_record(t, w, prepare_state(ansatz, w), exact.propagate(initial, t));
        r.samples_cumulative = counter.total_samples();
        r.circuits_cumulative = counter.circuit_evaluations();
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<TrajectoryRecord> run(const TfimModel& model, const AnsatzSpec& spec, std::span<const double> w0,
                                         const TdvaConfig& config, SampleCounter* counter_out = nullptr) {
    if (spec.num_qubits != model.num_spins) throw std::invalid_argument("tdva::run: ansatz and model sizes differ");
    return run(model.hamiltonian(), build_ansatz(spec), w0, config, counter_out);
}

} // namespace pvqd::tdva
