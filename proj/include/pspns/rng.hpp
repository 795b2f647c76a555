#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pspns {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// All randomness flows from one root seed through named sub-streams, so
// individual stages (split, sketch, init, shuffle, sampler) can be varied
// independently without perturbing the others.
inline uint64_t derive_seed(uint64_t root, std::string_view stream) {
    return splitmix64(splitmix64(root) ^ fnv1a64(stream));
}

inline uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index) {
    return splitmix64(derive_seed(root, stream) ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

// mt19937_64 with hand-rolled uniform/normal draws. The engine's output
// sequence is pinned by the standard; the distributions in <random> are not,
// so drawing through these methods keeps runs bit-reproducible across
// standard libraries.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), n > 0; bias is O(n / 2^64)
    uint32_t uniform_index(uint32_t n) {
        return static_cast<uint32_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pspns
