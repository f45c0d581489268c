#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace semrob {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Purpose tags keeping the per-entity random streams disjoint.
enum class Stream : std::uint64_t {
    NodeLabel = 1,
    NodeFeatures = 2,
    EdgeRow = 3,
    WeightInit = 4,
    TrainSplit = 5,
    AttackPick = 6,
    TestNode = 7,
    GraphSample = 8,
    Rewire = 9,
};

// Derives a child seed from (seed, purpose, index). Used to key independent
// streams so that graphs are reproducible regardless of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream purpose, std::uint64_t index) {
    std::uint64_t s = seed;
    (void)splitmix64_next(s);
    s ^= static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL;
    (void)splitmix64_next(s);
    s ^= index * 0xd1b54a32d192ed03ULL;
    return splitmix64_next(s);
}

// Counter-based stream: cheap to construct at any (seed, purpose, index)
// coordinate, deterministic across platforms (no std::distribution use).
class RngStream {
public:
    RngStream(std::uint64_t seed, Stream purpose, std::uint64_t index)
        : state_(derive_seed(seed, purpose, index)) {}

    explicit RngStream(std::uint64_t raw_state) : state_(raw_state) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller; caches the spare deviate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace semrob
