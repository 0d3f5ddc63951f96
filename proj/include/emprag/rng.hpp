#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "emprag/error.hpp"

namespace emprag {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic sub-stream id from a root seed and a tag path. Every game
// instance, agent and Monte-Carlo sample gets its own stream, so parallel
// and serial evaluation orders produce identical results.
inline std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t state = seed ^ 0x6a09e667f3bcc908ULL;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t tag : tags) {
        state ^= h + tag * 0xff51afd7ed558ccdULL;
        h = splitmix64(state);
    }
    return h;
}

// mt19937_64 with hand-rolled distributions. The std <random> distributions
// are implementation-defined, which would break byte-identical reruns across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (no cached spare, keeps state trivial).
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, n). Rejection sampling, exact.
    int uniform_int(int n) {
        if (n <= 0) throw Error(errc::bad_argument, "uniform_int: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<int>(x % un);
    }

    // Index from an unnormalized nonnegative weight vector.
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw Error(errc::bad_argument, "categorical: weights sum to zero");
        double u = uniform() * total;
        double acc = 0.0;
        int last_positive = -1;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            last_positive = static_cast<int>(i);
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return last_positive; // numeric slack at the top end
    }

private:
    std::mt19937_64 gen_;
};

} // namespace emprag
