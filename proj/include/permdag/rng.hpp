#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace permdag {

// Counter-based stream splitting. A stream is identified by a master seed
// plus a path of tags (step, particle, purpose, ...); the key is hashed with
// splitmix64 at every hop, so any (seed, path) pair yields the same engine
// regardless of which thread asks for it or in which order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngKey {
public:
    explicit RngKey(std::uint64_t seed) : key_(splitmix64(seed ^ 0xda3e39cb94b95bdbULL)) {}

    RngKey child(std::uint64_t tag) const {
        RngKey k(*this);
        k.key_ = splitmix64(key_ ^ splitmix64(tag ^ 0x2545f4914f6cdd1dULL));
        return k;
    }

    std::uint64_t value() const { return key_; }

    std::mt19937_64 engine() const { return std::mt19937_64(key_); }

private:
    std::uint64_t key_;
};

// Stream purposes. Fixed values so checkpoint resume replays identical draws.
namespace rng_tag {
inline constexpr std::uint64_t kInitLatent = 1;
inline constexpr std::uint64_t kInitTheta = 2;
inline constexpr std::uint64_t kScoreThetaGraphs = 3;
inline constexpr std::uint64_t kScoreZGumbel = 4;
inline constexpr std::uint64_t kPriorGumbel = 6;
inline constexpr std::uint64_t kSynthGraph = 7;
inline constexpr std::uint64_t kSynthParams = 8;
inline constexpr std::uint64_t kSynthNoise = 9;
inline constexpr std::uint64_t kHardGraphs = 10;
inline constexpr std::uint64_t kOrderingShuffle = 11;
}  // namespace rng_tag

inline double draw_normal(std::mt19937_64& eng, double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(eng);
}

inline double draw_uniform(std::mt19937_64& eng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(eng);
}

// Standard logistic via inverse CDF; u is kept away from {0,1} by the
// uniform distribution's half-open range plus an explicit clamp.
inline double draw_logistic(std::mt19937_64& eng) {
    double u = draw_uniform(eng);
    if (u <= 0.0) u = std::numeric_limits<double>::min();
    if (u >= 1.0) u = 1.0 - 1e-16;
    return std::log(u) - std::log1p(-u);
}

}  // namespace permdag
