#pragma once

#include "pvqd/pauli.hpp"
#include "pvqd/state_vector.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pvqd {

/// One point of a simulated trajectory.
struct TrajectoryRecord {
    double time = 0.0;
    std::vector<double> params;
    double infidelity_exact = 0.0;
    double magnetization_x = 0.0;
    double magnetization_z = 0.0;
    std::size_t iterations = 0;
    std::uint64_t samples_cumulative = 0;
    std::uint64_t circuits_cumulative = 0;
    double loss_final = 0.0;
    bool budget_exhausted = false;
    /// Readout loss at every inner iteration; filled only on request.
    std::vector<double> loss_history;
};

/// |<a|b>|^2
inline double fidelity(const StateVector& a, const StateVector& b) { return std::norm(inner_product(a, b)); }

/// Trapezoidal integral of `values` over the strictly increasing grid `times`.
inline double trapezoid(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw std::invalid_argument("trapezoid: grid and value counts differ");
    double acc = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double h = times[i] - times[i - 1];
        if (!(h > 0.0)) throw std::invalid_argument("trapezoid: times must be strictly increasing");
        acc += 0.5 * h * (values[i] + values[i - 1]);
    }
    return acc;
}

/// Integrated infidelity of `states` against `exact_states` sampled on the same time grid.
inline double integrated_infidelity(std::span<const double> times, std::span<const StateVector> states,
                                    std::span<const StateVector> exact_states) {
    if (states.size() != exact_states.size() || states.size() != times.size())
        throw std::invalid_argument("integrated_infidelity: time grid, trajectory and exact states must match");
    std::vector<double> infid(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) infid[i] = 1.0 - fidelity(exact_states[i], states[i]);
    return trapezoid(times, infid);
}

/// Integrated infidelity over [0, T] from recorded infidelities. The trajectory starts on the exact
/// state, so t = 0 contributes `initial_infidelity` (zero by default).
inline double integrated_infidelity(std::span<const TrajectoryRecord> records, double initial_infidelity = 0.0) {
    std::vector<double> t{0.0};
    std::vector<double> f{initial_infidelity};
    for (const auto& r : records) {
        t.push_back(r.time);
        f.push_back(r.infidelity_exact);
    }
    return trapezoid(t, f);
}

/// <sum_i sigma^axis_i>
inline double magnetization(const StateVector& state, char axis) {
    if (axis != 'x' && axis != 'X' && axis != 'z' && axis != 'Z' && axis != 'y' && axis != 'Y')
        throw std::invalid_argument(std::string("magnetization: unknown axis '") + axis + "'");
    double acc = 0.0;
    for (std::size_t i = 0; i < state.num_qubits(); ++i)
        acc += pauli_expectation(PauliString::single(i, axis), state).real();
    return acc;
}

struct PowerLawFit {
    double k = 0.0;
    double gamma = 0.0;
    double gamma_stderr = 0.0;
};

/// Least-squares fit of log f = log k + gamma log n.
inline PowerLawFit power_law_fit(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw std::invalid_argument("power_law_fit: need at least 3 points");
    double sx = 0, sy = 0;
    for (const auto& [n, f] : points) {
        if (!(n > 0.0) || !(f > 0.0)) throw std::invalid_argument("power_law_fit: values must be positive");
        sx += std::log(n);
        sy += std::log(f);
    }
    const auto m = static_cast<double>(points.size());
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0;
    for (const auto& [n, f] : points) {
        const double dx = std::log(n) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(f) - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("power_law_fit: all n values coincide");
    PowerLawFit fit;
    fit.gamma = sxy / sxx;
    const double intercept = my - fit.gamma * mx;
    fit.k = std::exp(intercept);
    double rss = 0;
    for (const auto& [n, f] : points) {
        const double r = std::log(f) - (intercept + fit.gamma * std::log(n));
        rss += r * r;
    }
    fit.gamma_stderr = std::sqrt(rss / (m - 2.0) / sxx);
    return fit;
}

/// Sample mean and (n-1) standard deviation.
inline std::pair<double, double> mean_std(std::span<const double> xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

} // namespace pvqd
