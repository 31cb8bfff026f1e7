#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace masguard {

// All randomness in the project flows through this generator (splitmix64).
// <random> distributions are implementation-defined, which would break the
// bit-exact reproducibility contract; these streams do not.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform integer in [0, n). Modulo bias is < 2^-50 for our n, below care.
    std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable seed derivation for independent substreams. Callers tag substreams
// with a purpose constant so that e.g. (run, agent, round) streams never
// collide regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                                 std::uint64_t d = 0) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t v : {a, b, c, d}) {
        h = mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    }
    return h;
}

}  // namespace masguard
