#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace absakit {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-stage seed derived from the global seed by stable hashing, so toggling
// one pipeline stage cannot shift the randomness of any other stage.
inline std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage_name) {
    return splitmix64(global_seed ^ fnv1a64(stage_name));
}

// Deterministic generator with platform-independent draws. std:: distributions
// are implementation-defined, so all sampling goes through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) { next_u64(); }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) without modulo bias.
    std::uint64_t uniform(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform(n)); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform_real() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    // First k entries of a random permutation of [0, n).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + index(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::uint64_t state_;
};

}  // namespace absakit
