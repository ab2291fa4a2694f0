#include "pvqd/estimator.hpp"
#include "pvqd/exact.hpp"
#include "pvqd/metrics.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace pvqd;
using pvqd::testing::random_params;
using pvqd::testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

struct SingleQubitModel {
    double h = 0.8;
    double dt = 0.05;
    Circuit ansatz = build_ansatz({1, 1, AxisScheme::all_x});
    Circuit trotter = build_trotter_step(0.0, h, 1, dt);
};

std::vector<double> central_difference(const StepInfidelity& problem, std::span<const double> dw, double eps) {
    SampleCounter unused;
    std::vector<double> g(dw.size());
    std::vector<double> probe(dw.begin(), dw.end());
    for (std::size_t i = 0; i < dw.size(); ++i) {
        probe[i] = dw[i] + eps;
        const double up = problem.loss(probe, MeasurementMode::statevector(), unused);
        probe[i] = dw[i] - eps;
        const double down = problem.loss(probe, MeasurementMode::statevector(), unused);
        probe[i] = dw[i];
        g[i] = (up - down) / (2 * eps);
    }
    return g;
}

} // namespace

TEST(EchoState, IdentityEchoIsAllZeros) {
    const Circuit ansatz = build_ansatz({3, 2, AxisScheme::alternating_xy});
    Rng rng(1);
    const auto w = random_params(ansatz.num_params(), rng);
    const std::vector<double> dw(ansatz.num_params(), 0.0);
    const StateVector echo = echo_state(ansatz, w, dw, build_trotter_step(0.25, 1.0, 3, 0.0));
    EXPECT_NEAR(std::norm(echo[0]), 1.0, 1e-12);
}

TEST(EchoState, SingleQubitRotationIsAbsorbed) {
    const SingleQubitModel m;
    for (double w0 : {0.0, 0.4, -1.3}) {
        const std::vector<double> w{w0}, dw{m.h * m.dt};
        EXPECT_NEAR(std::norm(echo_state(m.ansatz, w, dw, m.trotter)[0]), 1.0, 1e-10);
    }
}

TEST(EchoState, AllZerosProbabilityIsOverlap) {
    const Circuit ansatz = build_ansatz({3, 3, AxisScheme::alternating_xy});
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const auto w = random_params(ansatz.num_params(), rng);
        const auto dw = random_params(ansatz.num_params(), rng, 0.1);
        const double dt = 0.03 + 0.02 * trial;
        const Circuit trotter = build_trotter_step(0.25, 1.0, 3, dt);
        const StateVector evolved = apply_circuit(trotter, {}, prepare_state(ansatz, w));
        std::vector<double> shifted = w;
        for (std::size_t i = 0; i < w.size(); ++i) shifted[i] += dw[i];
        const double expected = fidelity(evolved, prepare_state(ansatz, shifted));
        EXPECT_NEAR(std::norm(echo_state(ansatz, w, dw, trotter)[0]), expected, 1e-12);
    }
}

TEST(EchoState, RejectsMismatchedVectors) {
    const Circuit ansatz = build_ansatz({2, 1, AxisScheme::all_x});
    const std::vector<double> w(3, 0.0), dw(2, 0.0);
    EXPECT_THROW(echo_state(ansatz, w, dw, build_trotter_step(0.25, 1.0, 2, 0.1)), std::invalid_argument);
}

TEST(EvalLoss, AllZerosEchoGivesZero) {
    SampleCounter counter;
    const StateVector zeros(3);
    EXPECT_EQ(eval_loss(zeros, LossKind::global, MeasurementMode::statevector(), 0.05, counter), 0.0);
    EXPECT_EQ(eval_loss(zeros, LossKind::local, MeasurementMode::statevector(), 0.05, counter), 0.0);
    EXPECT_EQ(eval_loss(zeros, LossKind::global, MeasurementMode::shots(100, 3), 0.05, counter), 0.0);
    EXPECT_EQ(counter.circuit_evaluations(), 3U);
    EXPECT_EQ(counter.total_samples(), 100U);
}

TEST(EvalLoss, RejectsNonPositiveStep) {
    SampleCounter counter;
    EXPECT_THROW(eval_loss(StateVector(1), LossKind::global, MeasurementMode::statevector(), 0.0, counter),
                 std::invalid_argument);
    EXPECT_THROW(eval_loss(StateVector(1), LossKind::global, MeasurementMode::statevector(), -0.1, counter),
                 std::invalid_argument);
}

TEST(EvalLoss, LocalCostAveragesSingleQubitMarginals) {
    Rng rng(3);
    const StateVector psi = random_state(3, rng);
    const auto probs = psi.probabilities();
    double expected = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
        double p0 = 0.0;
        for (std::size_t b = 0; b < probs.size(); ++b)
            if (((b >> q) & 1U) == 0) p0 += probs[b];
        expected += 1.0 - p0;
    }
    expected /= 3.0;
    SampleCounter counter;
    EXPECT_NEAR(eval_loss(psi, LossKind::local, MeasurementMode::statevector(), 1.0, counter), expected, 1e-13);
    EXPECT_NEAR(eval_loss(psi, LossKind::global, MeasurementMode::statevector(), 1.0, counter), 1.0 - probs[0], 1e-13);
}

TEST(EvalLoss, GlobalAndLocalVanishTogether) {
    SampleCounter counter;
    const auto sv = MeasurementMode::statevector();
    const Circuit ansatz = build_ansatz({3, 2, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.05);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = random_params(ansatz.num_params(), rng);
        const StateVector echo = echo_state(ansatz, w, random_params(ansatz.num_params(), rng, 0.1), trotter);
        EXPECT_GT(eval_loss(echo, LossKind::global, sv, 0.05, counter), 0.0);
        EXPECT_GT(eval_loss(echo, LossKind::local, sv, 0.05, counter), 0.0);
        // an echo landing on |0...0>: undo exactly what the forward part did
        const StateVector back = apply_circuit(ansatz, w, prepare_state(ansatz, w), true);
        EXPECT_LT(eval_loss(back, LossKind::global, sv, 0.05, counter), 1e-20);
        EXPECT_LT(eval_loss(back, LossKind::local, sv, 0.05, counter), 1e-20);
    }
}

TEST(EvalLoss, BoundedByInverseStepSquared) {
    const Circuit ansatz = build_ansatz({3, 3, AxisScheme::alternating_xy});
    Rng rng(5);
    const double dt = 0.1;
    SampleCounter counter;
    for (int trial = 0; trial < 20; ++trial) {
        const StateVector echo = echo_state(ansatz, random_params(ansatz.num_params(), rng),
                                            random_params(ansatz.num_params(), rng, 3.0),
                                            build_trotter_step(0.25, 1.0, 3, dt));
        for (auto kind : {LossKind::global, LossKind::local}) {
            const double l = eval_loss(echo, kind, MeasurementMode::statevector(), dt, counter);
            EXPECT_GE(l, 0.0);
            EXPECT_LE(l, 1.0 / (dt * dt) + 1e-9);
        }
    }
}

TEST(EvalLoss, ZeroShiftLossApproachesVariance) {
    const PauliSumOperator h = tfim_hamiltonian(0.25, 1.0, 3);
    const Circuit ansatz = build_ansatz({3, 3, AxisScheme::alternating_xy});
    Rng rng(6);
    const auto w = random_params(ansatz.num_params(), rng);
    const std::vector<double> dw(ansatz.num_params(), 0.0);
    const double var = variance(h, prepare_state(ansatz, w));
    double previous_error = 1e300;
    for (double dt : {0.02, 0.01, 0.005}) {
        const Circuit trotter = build_trotter_step(0.25, 1.0, 3, dt);
        SampleCounter counter;
        const double l = eval_loss(echo_state(ansatz, w, dw, trotter), LossKind::global, MeasurementMode::statevector(),
                                   dt, counter);
        const double error = std::abs(l - var);
        EXPECT_LT(error / var, 5 * dt);
        EXPECT_LT(error, previous_error);
        previous_error = error;
    }
}

TEST(StepInfidelity, LossMatchesEchoAndCountsOneEvaluation) {
    const Circuit ansatz = build_ansatz({3, 2, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.05);
    Rng rng(7);
    const auto w = random_params(ansatz.num_params(), rng);
    const auto dw = random_params(ansatz.num_params(), rng, 0.1);
    const StepInfidelity problem(ansatz, w, trotter, 0.05, LossKind::global);
    SampleCounter a, b;
    EXPECT_NEAR(problem.loss(dw, MeasurementMode::statevector(), a),
                eval_loss(echo_state(ansatz, w, dw, trotter), LossKind::global, MeasurementMode::statevector(), 0.05, b),
                1e-12);
    EXPECT_EQ(a.circuit_evaluations(), 1U);
    EXPECT_NEAR(problem.infidelity(dw), problem.loss(dw, MeasurementMode::statevector(), a) * 0.05 * 0.05, 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
    const Circuit ansatz = build_ansatz({3, 3, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.05);
    Rng rng(8);
    for (auto kind : {LossKind::global, LossKind::local}) {
        const auto w = random_params(ansatz.num_params(), rng);
        const auto dw = random_params(ansatz.num_params(), rng, 0.05);
        const StepInfidelity problem(ansatz, w, trotter, 0.05, kind);
        SampleCounter counter;
        const auto grad = problem.gradient(dw, MeasurementMode::statevector(), counter);
        const auto fd = central_difference(problem, dw, 1e-5);
        double worst = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i) worst = std::max(worst, std::abs(grad[i] - fd[i]));
        EXPECT_LT(worst, 1e-6);
    }
}

TEST(Gradient, VanishesAtAbsorbingMinimum) {
    const SingleQubitModel m;
    const StepInfidelity problem(m.ansatz, {0.3}, m.trotter, m.dt, LossKind::global);
    SampleCounter counter;
    const std::vector<double> dw{m.h * m.dt};
    EXPECT_LT(problem.loss(dw, MeasurementMode::statevector(), counter), 1e-20);
    EXPECT_NEAR(problem.gradient(dw, MeasurementMode::statevector(), counter)[0], 0.0, 1e-10);
}

TEST(Gradient, SingleQubitClosedForm) {
    // overlap cos(dw - h dt), so L = sin^2(dw - h dt) / dt^2 and dL/ddw = sin(2 (dw - h dt)) / dt^2
    const SingleQubitModel m;
    const StepInfidelity problem(m.ansatz, {0.0}, m.trotter, m.dt, LossKind::global);
    SampleCounter counter;
    for (double dw : {-0.2, 0.01, 0.3, 1.1}) {
        const std::vector<double> x{dw};
        const double delta = dw - m.h * m.dt;
        EXPECT_NEAR(problem.loss(x, MeasurementMode::statevector(), counter),
                    std::pow(std::sin(delta), 2) / (m.dt * m.dt), 1e-10);
        EXPECT_NEAR(problem.gradient(x, MeasurementMode::statevector(), counter)[0],
                    std::sin(2 * delta) / (m.dt * m.dt), 1e-9);
    }
}

TEST(Gradient, IndependentOfShift) {
    const Circuit ansatz = build_ansatz({3, 2, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.05);
    Rng rng(9);
    const auto w = random_params(ansatz.num_params(), rng);
    const auto dw = random_params(ansatz.num_params(), rng, 0.05);
    const StepInfidelity problem(ansatz, w, trotter, 0.05, LossKind::global);
    SampleCounter counter;
    const auto a = problem.gradient(dw, MeasurementMode::statevector(), counter, kPi / 2);
    const auto b = problem.gradient(dw, MeasurementMode::statevector(), counter, kPi / 4);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-9);
}

TEST(Gradient, RejectsDegenerateShift) {
    const SingleQubitModel m;
    const StepInfidelity problem(m.ansatz, {0.0}, m.trotter, m.dt, LossKind::global);
    SampleCounter counter;
    const std::vector<double> dw{0.0};
    EXPECT_THROW(problem.gradient(dw, MeasurementMode::statevector(), counter, 0.0), std::invalid_argument);
    EXPECT_THROW(problem.gradient(dw, MeasurementMode::statevector(), counter, kPi), std::invalid_argument);
}

TEST(Gradient, CountsTwoEvaluationsPerParameter) {
    const Circuit ansatz = build_ansatz({3, 3, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.05);
    const std::vector<double> w(15, 0.1), dw(15, 0.0);
    SampleCounter counter;
    const auto before = counter.circuit_evaluations();
    loss_gradient(ansatz, w, dw, 0.05, trotter, LossKind::global, MeasurementMode::shots(500, 1), kPi / 2, counter);
    EXPECT_EQ(counter.circuit_evaluations() - before, 30U);
    EXPECT_EQ(counter.total_samples(), 30U * 500U);
}

TEST(ShotLoss, LossEstimatorIsUnbiased) {
    const Circuit ansatz = build_ansatz({3, 2, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.2);
    Rng rng(10);
    const auto w = random_params(ansatz.num_params(), rng);
    const auto dw = random_params(ansatz.num_params(), rng, 0.2);
    const double dt = 0.2;
    for (auto kind : {LossKind::global, LossKind::local}) {
        const StepInfidelity problem(ansatz, w, trotter, dt, kind);
        SampleCounter counter;
        const double exact = problem.loss(dw, MeasurementMode::statevector(), counter);
        const std::uint64_t shots = 1000;
        const auto mode = MeasurementMode::shots(shots, 42);
        double mean = 0.0;
        const int reps = 200;
        for (int r = 0; r < reps; ++r) mean += problem.loss(dw, mode, counter);
        mean /= reps;
        // global: binomial; local: mean of N correlated binomials, bounded by the same variance
        const double q = exact * dt * dt;
        const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(shots * reps)) / (dt * dt);
        EXPECT_LT(std::abs(mean - exact), 3 * sigma);
    }
}

TEST(ShotLoss, SeededAndOrderIndependent) {
    const Circuit ansatz = build_ansatz({3, 2, AxisScheme::alternating_xy});
    const Circuit trotter = build_trotter_step(0.25, 1.0, 3, 0.05);
    const std::vector<double> w(10, 0.2), dw(10, 0.01);
    const StepInfidelity problem(ansatz, w, trotter, 0.05, LossKind::global);
    const auto mode = MeasurementMode::shots(800, 5);
    SampleCounter a, b;
    const auto first = problem.gradient(dw, mode, a);
    EXPECT_EQ(first, problem.gradient(dw, mode, b));
    EXPECT_NE(first, problem.gradient(dw, mode, a)); // later evaluation indices draw fresh substreams
    EXPECT_THROW(MeasurementMode::shots(0, 1), std::invalid_argument);
}

TEST(SampleCounter, TotalsAreConsistent) {
    SampleCounter c;
    EXPECT_EQ(c.reserve(3, 100), 0U);
    EXPECT_EQ(c.reserve(2, 100), 3U);
    EXPECT_EQ(c.circuit_evaluations(), 5U);
    EXPECT_EQ(c.total_samples(), 500U);
    const SampleCounter copy = c;
    EXPECT_EQ(copy.total_samples(), 500U);
}
