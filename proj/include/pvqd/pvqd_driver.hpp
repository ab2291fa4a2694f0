#pragma once

#include "pvqd/circuit.hpp"
#include "pvqd/errors.hpp"
#include "pvqd/estimator.hpp"
#include "pvqd/exact.hpp"
#include "pvqd/metrics.hpp"
#include "pvqd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvqd {

/// Open-chain transverse-field Ising parameters.
struct TfimModel {
    double coupling = 0.25;
    double field = 1.0;
    std::size_t num_spins = 3;

    PauliSumOperator hamiltonian() const { return tfim_hamiltonian(coupling, field, num_spins); }
};

struct PvqdConfig {
    double dt = 0.05;
    std::size_t n_steps = 60;
    double threshold = 1e-5;
    std::size_t max_iters = 1000;
    OptimizerSettings optimizer{OptimizerKind::sgd, 6e-4};
    bool warm_start = true;
    /// Guess for the first step (and every step without warm start). Empty means zeros.
    std::vector<double> initial_dw;
    /// When > 0 and warm start is off, each step starts from uniform noise in [-scale, scale].
    double random_guess_scale = 0.0;
    std::uint64_t guess_seed = 0;
    LossKind loss_kind = LossKind::global;
    MeasurementMode mode = MeasurementMode::statevector();
    /// Measurement used for the stopping test; defaults to `mode`.
    std::optional<MeasurementMode> readout_mode;
    double shift = std::numbers::pi / 2;
    std::size_t trotter_substeps = 1;
    /// Copy each step's readout-loss history into its record.
    bool keep_loss_history = false;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("PvqdConfig: dt must be > 0");
        if (!(threshold > 0.0)) throw std::invalid_argument("PvqdConfig: threshold must be > 0");
        if (max_iters < 1) throw std::invalid_argument("PvqdConfig: max_iters must be >= 1");
        if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("PvqdConfig: learning_rate must be > 0");
    }
};

struct StepResult {
    std::vector<double> dw_star;
    std::size_t iterations = 0;
    double final_loss = 0.0;
    std::uint64_t samples_used = 0;
    std::uint64_t circuits_used = 0;
    bool budget_exhausted = false;
    /// Readout loss before each update, then after the last one.
    std::vector<double> loss_history;
};

/// Gradient descent on dw from `dw_guess` until the readout loss drops below the threshold or
/// `max_iters` updates have been made. Returns the lowest-loss dw seen. Optimizer moments start fresh.
inline StepResult optimize_step(const StepInfidelity& problem, const PvqdConfig& config, std::span<const double> dw_guess,
                                SampleCounter& counter, std::size_t time_step = 0) {
    config.validate();
    const std::size_t p = problem.num_params();
    if (dw_guess.size() != p) throw std::invalid_argument("optimize_step: dw_guess must have length " + std::to_string(p));
    const MeasurementMode& readout = config.readout_mode ? *config.readout_mode : config.mode;
    const std::uint64_t samples_before = counter.total_samples();
    const std::uint64_t circuits_before = counter.circuit_evaluations();

    GradientOptimizer opt(config.optimizer, p);
    std::vector<double> dw(dw_guess.begin(), dw_guess.end());
    StepResult result;
    result.dw_star = dw;
    double best = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0;; ++it) {
        const double loss = problem.loss(dw, readout, counter);
        if (!std::isfinite(loss)) throw NumericalError("non-finite step-infidelity", time_step, it, loss);
        result.loss_history.push_back(loss);
        if (loss < best) {
            best = loss;
            result.dw_star = dw;
        }
        if (loss < config.threshold) break;
        if (it == config.max_iters) {
            result.budget_exhausted = true;
            break;
        }
        const auto grad = problem.gradient(dw, config.mode, counter, config.shift);
        for (double g : grad)
            if (!std::isfinite(g)) throw NumericalError("non-finite gradient component", time_step, it, g);
        opt.step(dw, grad);
        ++result.iterations;
    }
    result.final_loss = best;
    result.samples_used = counter.total_samples() - samples_before;
    result.circuits_used = counter.circuit_evaluations() - circuits_before;
    return result;
}

/// Convenience overload building the step problem from its pieces.
inline StepResult optimize_step(const Circuit& ansatz, std::span<const double> w, const Circuit& trotter,
                                const PvqdConfig& config, std::span<const double> dw_guess, SampleCounter& counter) {
    const StepInfidelity problem(ansatz, std::vector<double>(w.begin(), w.end()), trotter, config.dt, config.loss_kind);
    return optimize_step(problem, config, dw_guess, counter);
}

/// Records the observables of `state` at `time` against the exact state.
inline TrajectoryRecord make_record(double time, std::span<const double> params, const StateVector& state,
                                    const StateVector& exact_state) {
    TrajectoryRecord r;
    r.time = time;
    r.params.assign(params.begin(), params.end());
    r.infidelity_exact = std::clamp(1.0 - fidelity(exact_state, state), 0.0, 1.0);
    r.magnetization_x = magnetization(state, 'x');
    r.magnetization_z = magnetization(state, 'z');
    return r;
}

/// Projected variational time evolution: w(t + dt) = w(t) + dw*(t), one optimization per step.
inline std::vector<TrajectoryRecord> run_pvqd(const PauliSumOperator& hamiltonian, const Circuit& ansatz,
                                              const Circuit& trotter, std::span<const double> w0, const PvqdConfig& config,
                                              SampleCounter* counter_out = nullptr) {
    config.validate();
    const std::size_t p = ansatz.num_params();
    if (w0.size() != p) throw std::invalid_argument("run_pvqd: w0 must have length " + std::to_string(p));
    if (!config.initial_dw.empty() && config.initial_dw.size() != p)
        throw std::invalid_argument("run_pvqd: initial_dw must be empty or have length " + std::to_string(p));
    ansatz.validate();

    std::vector<TrajectoryRecord> records;
    if (config.n_steps == 0) return records;
    records.reserve(config.n_steps);

    const ExactPropagator exact(hamiltonian, ansatz.num_qubits());
    const StateVector initial = prepare_state(ansatz, w0);
    const std::vector<double> zero_guess = config.initial_dw.empty() ? std::vector<double>(p, 0.0) : config.initial_dw;
    Rng guess_rng(mix_seed(config.guess_seed));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    SampleCounter local_counter;
    SampleCounter& counter = counter_out ? *counter_out : local_counter;
    std::vector<double> w(w0.begin(), w0.end());
    std::vector<double> guess;

    for (std::size_t k = 0; k < config.n_steps; ++k) {
        if (k == 0 || !config.warm_start) {
            guess = zero_guess;
            if (!config.warm_start && config.random_guess_scale > 0.0)
                for (auto& g : guess) g = config.random_guess_scale * unit(guess_rng);
        }
        const StepInfidelity problem(ansatz, w, trotter, config.dt, config.loss_kind);
        StepResult step;
        try {
            step = optimize_step(problem, config, guess, counter, k);
        } catch (const NumericalError& e) {
            throw e.at_time_step(k);
        }
        for (std::size_t i = 0; i < p; ++i) w[i] += step.dw_star[i];
        if (config.warm_start) guess = step.dw_star;

        const double t = static_cast<double>(k + 1) * config.dt;
        TrajectoryRecord r = make_record(t, w, prepare_state(ansatz, w), exact.propagate(initial, t));
        r.iterations = step.iterations;
        r.loss_final = step.final_loss;
        r.budget_exhausted = step.budget_exhausted;
        if (config.keep_loss_history) r.loss_history = std::move(step.loss_history);
        r.samples_cumulative = counter.total_samples();
        r.circuits_cumulative = counter.circuit_evaluations();
        records.push_back(std::move(r));
    }
    return records;
}

/// TFIM form: builds the ansatz and a first-order Trotter step from the model.
inline std::vector<TrajectoryRecord> run_pvqd(const TfimModel& model, const AnsatzSpec& spec, std::span<const double> w0,
                                              const PvqdConfig& config, SampleCounter* counter_out = nullptr) {
    if (spec.num_qubits != model.num_spins) throw std::invalid_argument("run_pvqd: ansatz and model sizes differ");
    const Circuit ansatz = build_ansatz(spec);
    const Circuit trotter =
        build_trotter_step(model.coupling, model.field, model.num_spins, config.dt, config.trotter_substeps);
    return run_pvqd(model.hamiltonian(), ansatz, trotter, w0, config, counter_out);
}

} // namespace pvqd
