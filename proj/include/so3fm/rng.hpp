#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace so3fm {

// Deterministic random source. All randomness in the library flows through
// this class so that a (seed, draw-count) pair pins every result bit-for-bit.
// std::mt19937_64 has a standard-specified output sequence; the normal and
// uniform transforms below are written out explicitly instead of relying on
// std::normal_distribution, whose algorithm is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller. Consumes exactly two draws per call;
    // the sine partner is discarded to keep the stream position predictable.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]; keeps log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        // Rejection-free modulo is biased for huge n; all our n are tiny
        // (dataset sizes), where the bias is ~n/2^64 and irrelevant. Use
        // Lemire-style rejection anyway, it costs nothing.
        const std::uint64_t threshold = (-n) % n;
        for (;;) {
            const std::uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    std::uint64_t next_u64() { return gen_(); }

    // Derive an independent child stream; used to give each module of a
    // training run its own stream so that optional components do not shift
    // the draw positions of others.
    Rng fork(std::uint64_t salt) {
        std::uint64_t s = gen_() ^ (0x9e3779b97f4a7c15ull * (salt + 1));
        return Rng(s);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace so3fm
