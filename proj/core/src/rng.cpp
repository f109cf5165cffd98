#include "alrom/rng.hpp"

#include <cmath>

namespace alrom {

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    // FNV-1a over the tag, then mixed with the root.
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(root ^ h);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64(root + 0x9e3779b97f4a7c15ull * (index + 1));
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
}

std::uint64_t Rng::integer(std::uint64_t bound) {
    // Unbiased modulo: reject the truncated top range.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x > limit);
    return x % bound;
}

StageSeeds StageSeeds::from_root(std::uint64_t root) {
    StageSeeds s;
    s.root = root;
    s.estimate = derive_seed(root, "estimate");
    s.pool = derive_seed(root, "pool");
    s.pac = derive_seed(root, "pac");
    s.training = derive_seed(root, "training");
    s.baseline = derive_seed(root, "baseline");
    return s;
}

}  // namespace alrom
