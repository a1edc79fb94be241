#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace driftbench {

// SplitMix64 step. Fast, well-mixed, and fully under our control, so the
// generated streams are identical on every platform and toolchain.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic seed derivation: fold extra values into a parent seed.
// Every independent random stream in the project (per year, per stay, per
// tree, per repeat, ...) is derived this way, which is what makes the
// experiment grid recomputable in isolation and schedule-independent.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t v) {
    std::uint64_t s = seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
    return splitmix64(s);
}

template <typename... Rest>
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t v, Rest... rest) {
    return mix_seed(mix_seed(seed, v), static_cast<std::uint64_t>(rest)...);
}

// FNV-1a, for folding tags like regime/task names into seeds.
inline std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe input for log().
    double u01_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Inclusive on both ends. Lemire-style bounded draw without rejection
    // bias issues at these range sizes.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        const unsigned __int128 prod =
            static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(range);
        return lo + static_cast<std::int64_t>(prod >> 64);
    }

    bool bernoulli(double p) { return u01() < p; }

    // Box-Muller; consumes two draws, returns one value.
    double normal(double mean, double sd) {
        const double u1 = u01_open();
        const double u2 = u01();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + sd * z;
    }

    double exponential(double mean) { return -mean * std::log(u01_open()); }

private:
    std::uint64_t state_;
};

}  // namespace driftbench
