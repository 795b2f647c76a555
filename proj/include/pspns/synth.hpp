#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pspns/rng.hpp"

namespace pspns {

struct SyntheticSpec {
    uint32_t n_users = 0;
    uint32_t n_items = 0;
    uint32_t n_blocks = 1;
    double density_in = 0.1;    // within-block interaction probability (scaled by activity)
    double density_out = 0.01;  // cross-block probability
    double noise_rate = 0.0;    // fraction of observed interactions flipped to random items
    double activity_skew = 1.2; // Pareto tail exponent for per-user activity
    uint64_t seed = 0;

    void validate() const {
        if (n_users == 0 || n_items == 0) throw std::invalid_argument("synth: users and items must be >= 1");
        if (n_blocks == 0 || n_blocks > n_users || n_blocks > n_items)
            throw std::invalid_argument("synth: blocks must be in [1, min(users, items)]");
        if (!(density_in > 0.0 && density_in <= 1.0)) throw std::invalid_argument("synth: density_in must be in (0,1]");
        if (!(density_out >= 0.0 && density_out < 1.0))
            throw std::invalid_argument("synth: density_out must be in [0,1)");
        if (!(density_in > density_out)) throw std::invalid_argument("synth: density_in must exceed density_out");
        if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw std::invalid_argument("synth: noise must be in [0,1)");
        if (!(activity_skew > 0.0)) throw std::invalid_argument("synth: skew must be > 0");
    }
};

struct SyntheticData {
    std::vector<std::pair<uint32_t, uint32_t>> observed;  // post-flip log, (u asc, p asc)
    std::vector<std::vector<uint32_t>> truth;             // per-user true positives, sorted
    std::vector<double> activity;                         // per-user Pareto draw
    uint64_t n_flipped = 0;
};

inline uint32_t block_of_user(const SyntheticSpec& spec, uint32_t u) {
    return static_cast<uint32_t>(static_cast<uint64_t>(u) * spec.n_blocks / spec.n_users);
}

inline uint32_t block_of_item(const SyntheticSpec& spec, uint32_t p) {
    return static_cast<uint32_t>(static_cast<uint64_t>(p) * spec.n_blocks / spec.n_items);
}

inline constexpr double kMaxInteractionProb = 0.95;

// Planted-block log. Each user gets a Pareto activity multiplier
// x = (1-U)^(-1/skew); pair (u,p) is drawn Bernoulli(min(0.95, x * density)),
// density chosen by block agreement. A drawn interaction is then flipped with
// probability noise_rate to a random item the user has not interacted with
// (a logged false positive). Truth keeps the user's whole block plus the
// pre-flip cross-block draws; flips never enter it.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticData data;
    data.truth.resize(spec.n_users);
    data.activity.resize(spec.n_users);

    RandomStream activity_rng(derive_seed(spec.seed, "activity"));
    for (uint32_t u = 0; u < spec.n_users; ++u) {
        double uu = activity_rng.uniform();
        data.activity[u] = std::pow(1.0 - uu, -1.0 / spec.activity_skew);
    }

    std::vector<std::pair<uint32_t, uint32_t>> drawn;
    for (uint32_t u = 0; u < spec.n_users; ++u) {
        RandomStream draw_rng(derive_seed(spec.seed, "draw", u));
        uint32_t bu = block_of_user(spec, u);
        for (uint32_t p = 0; p < spec.n_items; ++p) {
            double base = block_of_item(spec, p) == bu ? spec.density_in : spec.density_out;
            double prob = std::min(kMaxInteractionProb, data.activity[u] * base);
            if (draw_rng.bernoulli(prob)) drawn.push_back({u, p});
        }
    }

    // truth: the full planted block, then genuine cross-block draws
    for (uint32_t u = 0; u < spec.n_users; ++u) {
        uint32_t bu = block_of_user(spec, u);
        for (uint32_t p = 0; p < spec.n_items; ++p)
            if (block_of_item(spec, p) == bu) data.truth[u].push_back(p);
    }
    for (const auto& [u, p] : drawn)
        if (block_of_item(spec, p) != block_of_user(spec, u)) data.truth[u].push_back(p);
    for (auto& t : data.truth) std::sort(t.begin(), t.end());

    // flips; the observed set per user tracks replacements so a flip never
    // lands on an item the user already has
    std::vector<std::vector<uint32_t>> seen(spec.n_users);
    for (const auto& [u, p] : drawn) seen[u].push_back(p);
    for (auto& s : seen) std::sort(s.begin(), s.end());

    RandomStream noise_rng(derive_seed(spec.seed, "noise"));
    data.observed.reserve(drawn.size());
    for (const auto& [u, p] : drawn) {
        uint32_t item = p;
        if (spec.noise_rate > 0.0 && noise_rng.bernoulli(spec.noise_rate)) {
            if (seen[u].size() < spec.n_items) {
                uint32_t candidate = 0;
                do {
                    candidate = noise_rng.uniform_index(spec.n_items);
                } while (std::binary_search(seen[u].begin(), seen[u].end(), candidate));
                auto old_pos = std::lower_bound(seen[u].begin(), seen[u].end(), item);
                seen[u].erase(old_pos);
                seen[u].insert(std::lower_bound(seen[u].begin(), seen[u].end(), candidate), candidate);
                item = candidate;
                ++data.n_flipped;
            }
        }
        data.observed.push_back({u, item});
    }
    std::sort(data.observed.begin(), data.observed.end());
    return data;
}

}  // namespace pspns
