#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "dmax/linalg.hpp"

namespace dmax {

// SplitMix64 (Steele, Lea, Flood 2014). Used to expand seeds into state words.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++ (Blackman, Vigna 2019), seeded via SplitMix64.
//
// Substreams: stream r of base seed s is seeded with splitmix64(s XOR
// (r+1)*0x9E3779B97F4A7C15); replication r of an experiment uses stream r.
// All normal deviates come from the Box-Muller transform of two uniforms, so
// the sequence is identical across platforms and compilers.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : state_) w = sm.next();
    }

    static Rng substream(std::uint64_t base_seed, std::uint64_t stream) {
        return Rng(base_seed ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0, 1]; never returns 0, so log() is safe.
    double uniform() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * (uniform() - 0x1.0p-53); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (cosine branch; one deviate per two uniforms).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    Vec normal_vector(int n) {
        Vec v(n);
        for (auto& x : v) x = normal();
        return v;
    }

    // Uniform on the unit sphere: a standard normal vector divided by its norm.
    Vec sphere_vector(int n) {
        Vec v = normal_vector(n);
        double r = norm(v);
        while (r == 0.0) {  // astronomically unlikely
            v = normal_vector(n);
            r = norm(v);
        }
        for (auto& x : v) x /= r;
        return v;
    }

    // Uniform in the closed ball of the given radius around a center.
    Vec ball_vector(std::span<const double> center, double radius) {
        const int n = static_cast<int>(center.size());
        Vec v = sphere_vector(n);
        const double r = radius * std::pow(uniform(), 1.0 / n);
        for (int i = 0; i < n; ++i) v[i] = center[i] + r * v[i];
        return v;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
};

}  // namespace dmax
