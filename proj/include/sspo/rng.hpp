#pragma once

#include <cstdint>
#include <random>

namespace sspo {

// splitmix64; used for seed derivation and hash mixing.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and any number of
// integer coordinates (role tag, update index, query id, rollout index, ...).
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t base, Parts... parts) {
    std::uint64_t h = splitmix64(base);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(parts))), ...);
    return h;
}

// Stream role tags, so different uses of the same base seed never collide.
namespace seed_tag {
constexpr std::uint64_t params = 0x01;
constexpr std::uint64_t task = 0x02;
constexpr std::uint64_t rollout = 0x03;
constexpr std::uint64_t eval = 0x04;
constexpr std::uint64_t probe = 0x05;
}  // namespace seed_tag

// Deterministic RNG wrapper. All draws go through explicit constructions
// (53-bit doubles, multiply-shift integer ranges) rather than
// std::uniform_*_distribution, so streams are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto wide = static_cast<unsigned __int128>(gen_()) * range;
        return lo + static_cast<int>(wide >> 64);
    }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * next_double(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace sspo
