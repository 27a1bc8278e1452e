#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace mohpi {

// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// std::mt19937_64 is bit-specified by the standard, the std distributions are
// not, so the draws below are written out to keep results identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(substream_seed(seed, stream)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), unbiased (rejection).
    std::uint64_t below(std::uint64_t n)
    {
        if (n <= 1) {
            return 0;
        }
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t r = 0;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    // Standard normal via Box-Muller (one value per call).
    double normal()
    {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mohpi
