#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace femon {

/// SplitMix64 step: advances `state` and returns the next output.
/// Used only to expand seeds into engine state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic, portable random engine (xoshiro256++) with Gaussian and
/// Student-t variates.  A (seed, stream) pair selects an independent
/// substream, so parallel workers can draw from disjoint streams whose
/// output does not depend on how work is partitioned.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        // Decorrelate streams by folding the stream index into the seed
        // before expansion; splitmix64 then fills the engine state.
        std::uint64_t sm = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        for (auto& word : state_) word = splitmix64(sm);
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

    /// Uniform draw on [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw (Marsaglia polar method with one cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Student-t draw with integer df >= 3, standardized to unit variance
    /// so it can be swapped for a standard normal innovation.
    double student_t(int df) {
        if (df < 3) throw std::invalid_argument("student_t: df must be >= 3");
        double chisq = 0.0;
        for (int i = 0; i < df; ++i) {
            const double z = normal();
            chisq += z * z;
        }
        const double t = normal() / std::sqrt(chisq / df);
        return t * std::sqrt((df - 2.0) / df);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace femon
