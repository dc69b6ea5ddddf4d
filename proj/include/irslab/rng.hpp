#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace irslab::rng {

// Counter-based substream generator. A Stream is keyed by (seed, stream_id);
// the same key always reproduces the same draw sequence, independent of which
// worker consumes it or in what order streams are created. This is what makes
// every simulated statistic invariant to the thread count.
//
// The generator is SplitMix64 (Steele, Lea, Flood 2014) with the initial state
// scattered by two finalizer rounds over the key, so per-trial substreams are
// decorrelated even for adjacent stream ids.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
        state_ = finalize(finalize(seed ^ kSeedTweak) + stream_id * kGamma);
    }

    std::uint64_t next_u64() noexcept {
        state_ += kGamma;
        return finalize(state_);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() noexcept { return 1.0 - uniform(); }

    // Phase uniform in [0, 2*pi).
    double phase() noexcept {
        double p = uniform() * two_pi();
        return p < two_pi() ? p : 0.0;  // guard the rounding edge
    }

    // Step uniform in [-delta, delta].
    double symmetric(double delta) noexcept { return (2.0 * uniform() - 1.0) * delta; }

    // One sample of CN(0, var) via the Box-Muller transform: two uniforms in,
    // fixed consumption per call, which keeps replay bookkeeping trivial.
    std::complex<double> complex_normal(double var) noexcept {
        const double r = std::sqrt(-var * std::log(uniform_pos()));
        const double a = phase();
        return {r * std::cos(a), r * std::sin(a)};
    }

    // Magnitude |z| of z ~ CN(0, var), i.e. Rayleigh, drawn by inverse CDF.
    double rayleigh_mag(double var) noexcept {
        return std::sqrt(-var * std::log(uniform_pos()));
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kSeedTweak = 0x5851F42D4C957F2DULL;

    static constexpr double two_pi() { return 6.283185307179586476925286766559; }

    // Stafford "mix13" finalizer.
    static std::uint64_t finalize(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace irslab::rng
