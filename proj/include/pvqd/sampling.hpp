#pragma once

#include "pvqd/state_vector.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace pvqd {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic substream `index` of the stream rooted at `seed`.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632be59bd9b4e019ULL)));
}

/// Outcome counts keyed by basis index (bit q = qubit q). Only observed outcomes are present.
using Histogram = std::map<std::uint64_t, std::uint64_t>;

/// Bitstring for a basis index, written qubit 0 first.
inline std::string to_bitstring(std::uint64_t index, std::size_t num_qubits) {
    std::string s(num_qubits, '0');
    for (std::size_t q = 0; q < num_qubits; ++q)
        if ((index >> q) & 1U) s[q] = '1';
    return s;
}

/// Draws `n_shots` computational-basis measurements of `probabilities`.
///
/// The multinomial draw is realised as a chain of conditional binomials, which has the same law as
/// n_shots independent categorical draws but costs O(2^N) instead of O(n_shots).
inline Histogram sample_counts(std::span<const double> probabilities, std::uint64_t n_shots, Rng& rng) {
    if (n_shots == 0) throw std::invalid_argument("sample_bitstrings: n_shots must be at least 1");
    Histogram hist;
    double remaining_mass = 0.0;
    for (double p : probabilities) remaining_mass += p;
    std::size_t last = probabilities.size();
    while (last > 0 && probabilities[last - 1] <= 0.0) --last;
    if (last == 0) throw std::invalid_argument("sample_bitstrings: distribution has no mass");
    std::uint64_t remaining = n_shots;
    for (std::size_t i = 0; i < last && remaining > 0; ++i) {
        const double p = probabilities[i];
        std::uint64_t k = 0;
        if (i + 1 == last || p >= remaining_mass) {
            k = remaining;
        } else if (p > 0.0) {
            std::binomial_distribution<std::uint64_t> draw(remaining, std::clamp(p / remaining_mass, 0.0, 1.0));
            k = draw(rng);
        }
        remaining_mass -= p;
        if (k > 0) {
            hist[i] = k;
            remaining -= k;
        }
    }
    return hist;
}

inline Histogram sample_bitstrings(const StateVector& state, std::uint64_t n_shots, Rng& rng) {
    const auto p = state.probabilities();
    return sample_counts(p, n_shots, rng);
}

/// Mean of `n_shots` independent +-1 outcomes whose exact mean is `value` (clamped to [-1, 1]).
inline double sample_pm1_mean(double value, std::uint64_t n_shots, Rng& rng) {
    if (n_shots == 0) throw std::invalid_argument("sample_pm1_mean: n_shots must be at least 1");
    const double p_plus = std::clamp(0.5 * (1.0 + value), 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> draw(n_shots, p_plus);
    const auto plus = static_cast<double>(draw(rng));
    return (2.0 * plus - static_cast<double>(n_shots)) / static_cast<double>(n_shots);
}

} // namespace pvqd
