#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "lorank/matrix.hpp"

namespace lorank {

/// xoshiro256++ seeded through SplitMix64. Uniform doubles come from the top
/// 53 bits, Gaussians from Box-Muller with both outputs of a pair consumed in
/// order (cosine variate first). This exact pipeline is normative: adapters
/// squeezed by independent implementations must draw identical sketches.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
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

    /// Uniform in [0, 1) on the 2^-53 grid.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal variate.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        const double u2 = next_double();
        if (u1 == 0.0) u1 = 0x1.0p-53; // log(0) guard; smallest grid value
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Standard-normal matrix filled row-major from the seeded stream.
/// Same seed, same shape: bit-identical output.
inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    Xoshiro256pp rng(seed);
    for (double& v : m.data()) v = rng.next_gaussian();
    return m;
}

/// Fills from an existing stream; lets callers draw several matrices from one
/// seed in a defined order.
inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Xoshiro256pp& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.next_gaussian();
    return m;
}

} // namespace lorank
