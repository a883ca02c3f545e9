#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace renyiprobe {

namespace detail {

/// SplitMix64 step (Steele, Lea, Flood). Used only for key derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Purpose tags for substream derivation. Keeping the tag distinct from the
/// loop indices guarantees that e.g. the disorder stream of unitary 3 never
/// collides with the measurement stream of unitary 3.
enum class StreamTag : std::uint64_t {
    cue = 1,
    quench_pattern = 2,
    quench_times = 3,
    measurement = 4,
    local_unitary = 5,
    state_init = 6,
    shared_pattern = 7,
    trial = 8,
    lanczos = 9,
    sector_block = 10,
};

/// Seeded, hierarchically splittable random stream.
///
/// All draws are produced from std::mt19937_64 (bit-exact across platforms by
/// the standard) through hand-rolled uniform/normal transforms, so identical
/// (seed, stream id) gives identical values everywhere. std::*_distribution is
/// intentionally not used: its output is implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : key_(seed), eng_(detail::splitmix64(seed)) {}

    /// Derive an independent child stream from (tag, a, b). Does not consume
    /// state of the parent, so derivation order is irrelevant.
    RandomStream child(StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0) const {
        std::uint64_t k = key_;
        k = detail::splitmix64(k ^ static_cast<std::uint64_t>(tag));
        k = detail::splitmix64(k ^ a);
        k = detail::splitmix64(k ^ b);
        return RandomStream(k);
    }

    std::uint64_t bits() { return eng_(); }

    /// Uniform double in the open interval (0,1); 53 significant bits.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (deterministic, platform independent).
    double normal() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        have_cache_ = true;
        return r * std::cos(a);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
        // Lemire-style rejection-free enough for simulation use: rejection loop
        // keeps the draw exactly uniform.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return x % n;
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::mt19937_64 eng_;
    double cache_ = 0.0;
    bool have_cache_ = false;
};

} // namespace renyiprobe
