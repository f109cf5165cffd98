#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace alrom {

/// SplitMix64 mixing step; used for seed derivation so that stage streams
/// are decorrelated even for adjacent root seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Deterministic random source. All draws are generated from raw mt19937_64
/// output with fixed arithmetic, so a seed reproduces the same stream on any
/// platform (std::uniform_real_distribution makes no such promise).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method.
    double normal();

    /// Unbiased integer in [0, bound); bound must be nonzero.
    std::uint64_t integer(std::uint64_t bound);

    /// Fisher-Yates shuffle driven by integer().
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[integer(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Per-stage seeds split from the single root seed of a run, so each stage
/// is reproducible in isolation.
struct StageSeeds {
    std::uint64_t root = 0;
    std::uint64_t estimate = 0;
    std::uint64_t pool = 0;
    std::uint64_t pac = 0;
    std::uint64_t training = 0;
    std::uint64_t baseline = 0;

    static StageSeeds from_root(std::uint64_t root);
};

}  // namespace alrom
