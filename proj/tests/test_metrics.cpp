#include "pvqd/metrics.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace pvqd;
using pvqd::testing::kron_matrix;
using pvqd::testing::random_state;
using pvqd::testing::to_eigen;

TEST(Fidelity, TrivialCases) {
    Rng rng(1);
    const StateVector psi = random_state(3, rng);
    EXPECT_NEAR(fidelity(psi, psi), 1.0, 1e-13);
    EXPECT_EQ(fidelity(StateVector::basis(1, 0), StateVector::basis(1, 1)), 0.0);
    EXPECT_NEAR(fidelity(StateVector(1), StateVector::plus(1)), 0.5, 1e-15);
    EXPECT_THROW(fidelity(StateVector(1), StateVector(2)), std::invalid_argument);
}

TEST(IntegratedInfidelity, IdenticalTrajectoriesGiveZero) {
    Rng rng(2);
    std::vector<double> times{0.0, 0.1, 0.2};
    std::vector<StateVector> states{random_state(2, rng), random_state(2, rng), random_state(2, rng)};
    EXPECT_NEAR(integrated_infidelity(times, states, states), 0.0, 1e-14);
}

TEST(IntegratedInfidelity, ConstantAndLinearProfiles) {
    const double t_end = 3.0, c = 0.2;
    std::vector<double> times, constant, ramp;
    for (int k = 0; k <= 60; ++k) {
        const double t = 0.05 * k;
        times.push_back(t);
        constant.push_back(c);
        ramp.push_back(c * t / t_end);
    }
    EXPECT_NEAR(trapezoid(times, constant), c * t_end, 1e-12);
    EXPECT_NEAR(trapezoid(times, ramp), c * t_end / 2, 1e-12);
}

TEST(IntegratedInfidelity, StateFormUsesFidelities) {
    const std::vector<double> times{0.0, 1.0};
    const std::vector<StateVector> a{StateVector(1), StateVector(1)};
    const std::vector<StateVector> b{StateVector(1), StateVector::plus(1)};
    EXPECT_NEAR(integrated_infidelity(times, a, b), 0.25, 1e-14);
    EXPECT_THROW(integrated_infidelity(std::vector<double>{0.0}, a, b), std::invalid_argument);
}

TEST(IntegratedInfidelity, RecordsStartFromExactInitialState) {
    std::vector<TrajectoryRecord> records(3);
    for (int k = 0; k < 3; ++k) {
        records[k].time = 0.5 * (k + 1);
        records[k].infidelity_exact = 0.1;
    }
    // 0 -> 0.1 over the first interval, then flat
    EXPECT_NEAR(integrated_infidelity(records), 0.5 * 0.05 + 1.0 * 0.1, 1e-14);
    EXPECT_THROW(trapezoid(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}), std::invalid_argument);
}

TEST(IntegratedInfidelity, BoundedByTotalTime) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TrajectoryRecord> records(60);
    for (std::size_t k = 0; k < 60; ++k) {
        records[k].time = 0.05 * static_cast<double>(k + 1);
        records[k].infidelity_exact = u(rng);
    }
    const double d = integrated_infidelity(records);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 3.0);
}

TEST(Magnetization, ProductStates) {
    EXPECT_NEAR(magnetization(StateVector(3), 'z'), 3.0, 1e-15);
    EXPECT_NEAR(magnetization(StateVector::plus(3), 'x'), 3.0, 1e-14);
    EXPECT_THROW(magnetization(StateVector(1), 'q'), std::invalid_argument);
}

TEST(Magnetization, MatchesDenseOperator) {
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const StateVector psi = random_state(3, rng);
        for (char axis : {'x', 'z'}) {
            const Eigen::VectorXcd v = to_eigen(psi);
            const Eigen::MatrixXcd m = kron_matrix(total_magnetization(static_cast<char>(axis - 'a' + 'A'), 3), 3);
            const double expected = (v.adjoint() * m * v)(0, 0).real();
            const double got = magnetization(psi, axis);
            EXPECT_NEAR(got, expected, 1e-10);
            EXPECT_LE(std::abs(got), 3.0 + 1e-12);
        }
    }
}

TEST(PowerLawFit, NoiselessPoints) {
    for (auto [k, gamma] : {std::pair{2.0, -1.0}, std::pair{0.5, -0.5}}) {
        std::vector<std::pair<double, double>> pts;
        for (double n : {1e2, 1e3, 1e4, 1e5}) pts.emplace_back(n, k * std::pow(n, gamma));
        const PowerLawFit fit = power_law_fit(pts);
        EXPECT_NEAR(fit.k, k, 1e-9);
        EXPECT_NEAR(fit.gamma, gamma, 1e-9);
    }
}

TEST(PowerLawFit, NoisyPointsWithinStandardError) {
    // the one-standard-error band should hold the true exponent about 68% of the time
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.1);
    const int datasets = 1000;
    int covered = 0;
    for (int trial = 0; trial < datasets; ++trial) {
        std::vector<std::pair<double, double>> pts;
        for (double n = 100; n <= 1e6; n *= 2) pts.emplace_back(n, 3.0 * std::pow(n, -0.8) * std::exp(noise(rng)));
        const PowerLawFit fit = power_law_fit(pts);
        ASSERT_GT(fit.gamma_stderr, 0.0);
        covered += std::abs(fit.gamma + 0.8) < fit.gamma_stderr;
    }
    const double rate = static_cast<double>(covered) / datasets;
    EXPECT_GT(rate, 0.60);
    EXPECT_LT(rate, 0.76);
}

TEST(PowerLawFit, RejectsBadInput) {
    const std::vector<std::pair<double, double>> two{{1, 1}, {2, 2}};
    EXPECT_THROW(power_law_fit(two), std::invalid_argument);
    const std::vector<std::pair<double, double>> neg{{1, 1}, {2, -2}, {3, 1}};
    EXPECT_THROW(power_law_fit(neg), std::invalid_argument);
}

TEST(MeanStd, Basics) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto [m, s] = mean_std(xs);
    EXPECT_DOUBLE_EQ(m, 2.5);
    EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
}
