#pragma once

#include <cstdint>
#include <complex>
#include <cmath>

namespace papc::rng {

// SplitMix64 finalizer. Used both as the seeding mixer and for substream
// derivation, so that substream seeds are decorrelated from each other and
// from the raw user seed.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream derivation contract: substream `i` of a 64-bit seed is
// mix64(seed + (i+1) * golden_gamma). Trial i of a Monte Carlo sweep draws
// from derive_stream(seed, i); results are therefore independent of how
// trials are scheduled across workers.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream)
{
    return mix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1ULL));
}

// xoshiro256++ (Blackman/Vigna), seeded through SplitMix64.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed)
    {
        std::uint64_t sm = seed;
        for (auto& word : state_)
        {
            sm += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next()
    {
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

    // Uniform on [0,1), 53-bit resolution.
    double uniform()
    {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1], safe as a log() argument.
    double uniform_pos()
    {
        return static_cast<double>((next() >> 11) + 1ULL) * 0x1.0p-53;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k)
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

// One Box-Muller pair per call: real and imaginary parts are N(0, 1/2) so
// that E|z|^2 = 1 (circularly-symmetric unit-variance complex Gaussian).
inline std::complex<double> complex_gaussian(Xoshiro256pp& gen)
{
    const double u1 = gen.uniform_pos();
    const double u2 = gen.uniform();
    const double rad = std::sqrt(-std::log(u1)); // sqrt(-2 ln u1) / sqrt(2)
    const double ang = 6.283185307179586476925286766559 * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

} // namespace papc::rng
