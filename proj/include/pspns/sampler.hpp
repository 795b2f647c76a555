#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pspns/rng.hpp"

namespace pspns {

enum class SamplerKind { uniform, popularity, dynamic };

inline const char* to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::uniform: return "uniform";
        case SamplerKind::popularity: return "popularity";
        case SamplerKind::dynamic: return "dynamic";
    }
    return "?";
}

inline SamplerKind parse_sampler_kind(const std::string& s) {
    if (s == "uniform") return SamplerKind::uniform;
    if (s == "popularity") return SamplerKind::popularity;
    if (s == "dynamic") return SamplerKind::dynamic;
    throw std::invalid_argument("unknown sampler kind: " + s);
}

struct NegativeSamplerConfig {
    SamplerKind kind = SamplerKind::uniform;
    double popularity_exponent = 1.0;
    uint32_t candidate_count = 16;  // M, dynamic only
    uint64_t seed = 0;
    bool exclude_psp_positives = true;  // exclusion set = PSP positives vs raw train positives
};

// exclusion is a sorted item-index vector
inline bool is_excluded(const std::vector<uint32_t>& exclusion, uint32_t item) {
    return std::binary_search(exclusion.begin(), exclusion.end(), item);
}

inline constexpr int kMaxRejections = 100;

// Uniform draw over items outside the exclusion set. Rejection sampling,
// falling back to explicit complement enumeration after kMaxRejections.
inline uint32_t sample_uniform(uint32_t n_items, const std::vector<uint32_t>& exclusion, RandomStream& rng) {
    if (n_items == 0) throw std::invalid_argument("sample_uniform: empty catalog");
    for (int tries = 0; tries < kMaxRejections; ++tries) {
        uint32_t p = rng.uniform_index(n_items);
        if (!is_excluded(exclusion, p)) return p;
    }
    std::vector<uint32_t> complement;
    complement.reserve(n_items - std::min<size_t>(exclusion.size(), n_items));
    for (uint32_t p = 0; p < n_items; ++p)
        if (!is_excluded(exclusion, p)) complement.push_back(p);
    if (complement.empty()) throw std::runtime_error("sample_uniform: all items excluded");
    return complement[rng.uniform_index(static_cast<uint32_t>(complement.size()))];
}

// Popularity-proportional distribution over the catalog, item mass
// colD(p)^exponent for items with positive degree. Built once, sampled many
// times by binary search on the cumulative table.
class PopularityDist {
public:
    PopularityDist() = default;
    PopularityDist(const std::vector<uint32_t>& item_degrees, double exponent) : exponent_(exponent) {
        if (exponent < 0.0) throw std::invalid_argument("popularity exponent must be >= 0");
        cumulative_.resize(item_degrees.size());
        double acc = 0.0;
        for (size_t p = 0; p < item_degrees.size(); ++p) {
            if (item_degrees[p] > 0) acc += std::pow(static_cast<double>(item_degrees[p]), exponent);
            cumulative_[p] = acc;
        }
        total_ = acc;
    }

    uint32_t sample(const std::vector<uint32_t>& exclusion, RandomStream& rng) const {
        if (total_ <= 0.0) throw std::runtime_error("sample_popularity: no item with positive mass");
        for (int tries = 0; tries < kMaxRejections; ++tries) {
            uint32_t p = draw(rng);
            if (!is_excluded(exclusion, p)) return p;
        }
        // explicit pass over the eligible complement
        double eligible_total = 0.0;
        std::vector<std::pair<uint32_t, double>> eligible;
        for (uint32_t p = 0; p < cumulative_.size(); ++p) {
            double mass = cumulative_[p] - (p ? cumulative_[p - 1] : 0.0);
            if (mass > 0.0 && !is_excluded(exclusion, p)) {
                eligible_total += mass;
                eligible.push_back({p, eligible_total});
            }
        }
        if (eligible.empty()) throw std::runtime_error("sample_popularity: all eligible items excluded");
        double x = rng.uniform() * eligible_total;
        for (const auto& [p, cum] : eligible)
            if (x < cum) return p;
        return eligible.back().first;
    }

private:
    uint32_t draw(RandomStream& rng) const {
        double x = rng.uniform() * total_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
        if (it == cumulative_.end()) --it;
        return static_cast<uint32_t>(it - cumulative_.begin());
    }

    std::vector<double> cumulative_;
    double total_ = 0.0;
    double exponent_ = 1.0;
};

// Model-score-based sampling: M uniform non-excluded candidates (drawn with
// replacement), keep the best-scoring one; ties toward the lower index.
template <typename ScoreFn>
uint32_t sample_dynamic(uint32_t n_items, const std::vector<uint32_t>& exclusion, ScoreFn&& score, uint32_t m,
                        RandomStream& rng) {
    if (m < 1) throw std::invalid_argument("sample_dynamic: candidate count must be >= 1");
    uint32_t best = sample_uniform(n_items, exclusion, rng);
    double best_score = score(best);
    for (uint32_t c = 1; c < m; ++c) {
        uint32_t p = sample_uniform(n_items, exclusion, rng);
        double sc = score(p);
        if (sc > best_score || (sc == best_score && p < best)) {
            best = p;
            best_score = sc;
        }
    }
    return best;
}

}  // namespace pspns
