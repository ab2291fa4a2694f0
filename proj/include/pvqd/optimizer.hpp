#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pvqd {

enum class OptimizerKind { sgd, adam };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::sgd;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Plain gradient descent or Adam over a parameter vector. `reset` clears the moment estimates.
class GradientOptimizer {
public:
    explicit GradientOptimizer(OptimizerSettings settings, std::size_t size = 0) : s_(settings) {
        if (!(s_.learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
        reset(size);
    }

    void reset(std::size_t size) {
        m_.assign(size, 0.0);
        v_.assign(size, 0.0);
        t_ = 0;
    }

    const OptimizerSettings& settings() const noexcept { return s_; }

    /// x <- x - update(grad)
    void step(std::span<double> x, std::span<const double> grad) {
        if (x.size() != grad.size()) throw std::invalid_argument("optimizer: size mismatch");
        if (s_.kind == OptimizerKind::sgd) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] -= s_.learning_rate * grad[i];
            return;
        }
        if (m_.size() != x.size()) reset(x.size());
        ++t_;
        const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < x.size(); ++i) {
            m_[i] = s_.beta1 * m_[i] + (1.0 - s_.beta1) * grad[i];
            v_[i] = s_.beta2 * v_[i] + (1.0 - s_.beta2) * grad[i] * grad[i];
            x[i] -= s_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + s_.epsilon);
        }
    }

private:
    OptimizerSettings s_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

} // namespace pvqd
