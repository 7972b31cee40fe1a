#ifndef LINKTHIEF_RNG_HPP
#define LINKTHIEF_RNG_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace linkthief {

/// Deterministic seeded RNG used everywhere randomness is needed.
/// Every stage derives its own stream via derive_seed so that adding or
/// reordering draws in one stage cannot perturb another.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return uni_(eng_); }
    double normal() { return norm_(eng_); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(std::uniform_int_distribution<long long>(0, n - 1)(eng_));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), eng_);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
    std::normal_distribution<double> norm_{0.0, 1.0};
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable seed for a named substream of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(master ^ h);
}

} // namespace linkthief

#endif
