#pragma once

#include <cstdint>
#include <random>

namespace dmab {

// SplitMix64 step, used to derive independent stream seeds from a root seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// One random stream. mt19937_64 output is pinned by the standard, and
/// uniform01() maps it to doubles without implementation-defined
/// distributions, so traces are reproducible across compilers.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

/// Derives independent streams from a root seed and an integer tag triple.
/// The same (root, tags) always yields the same stream, independent of the
/// order in which streams are created or consumed.
class StreamFactory {
public:
    explicit StreamFactory(std::uint64_t root_seed) : root_(root_seed) {}

    RngStream stream(std::uint64_t tag0, std::uint64_t tag1 = 0, std::uint64_t tag2 = 0) const {
        std::uint64_t s = root_;
        splitmix64(s);
        s ^= 0x517cc1b727220a95ULL * (tag0 + 1);
        splitmix64(s);
        s ^= 0x2545f4914f6cdd1dULL * (tag1 + 1);
        splitmix64(s);
        s ^= 0x9e6c63d0a1e2f3b7ULL * (tag2 + 1);
        std::uint64_t seed = splitmix64(s);
        return RngStream(seed);
    }

    std::uint64_t root() const { return root_; }

private:
    std::uint64_t root_;
};

// Stream tag namespaces, one per purpose so streams never alias.
namespace stream_tag {
inline constexpr std::uint64_t player_arm = 1;  // (player, arm) reward streams
inline constexpr std::uint64_t chain_init = 2;  // Markov initial-state draws
inline constexpr std::uint64_t aux = 3;         // test / scratch streams
}  // namespace stream_tag

}  // namespace dmab
