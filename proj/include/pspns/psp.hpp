#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "pspns/dataset.hpp"
#include "pspns/graph.hpp"

namespace pspns {

enum class PspMode { one_hop, one_hop_x2, svd_hop, w_hop, w_hop_lw, w_ew };

inline const char* to_string(PspMode m) {
    switch (m) {
        case PspMode::one_hop: return "one_hop";
        case PspMode::one_hop_x2: return "one_hop_x2";
        case PspMode::svd_hop: return "svd_hop";
        case PspMode::w_hop: return "w_hop";
        case PspMode::w_hop_lw: return "w_hop_lw";
        case PspMode::w_ew: return "w_ew";
    }
    return "?";
}

inline PspMode parse_psp_mode(const std::string& s) {
    if (s == "one_hop") return PspMode::one_hop;
    if (s == "one_hop_x2") return PspMode::one_hop_x2;
    if (s == "svd_hop") return PspMode::svd_hop;
    if (s == "w_hop") return PspMode::w_hop;
    if (s == "w_hop_lw") return PspMode::w_hop_lw;
    if (s == "w_ew") return PspMode::w_ew;
    throw std::invalid_argument("unknown psp mode: " + s);
}

struct PositivePair {
    uint32_t user;
    uint32_t item;
    uint32_t multiplicity;  // replication count in the training stream
    double loss_scale;      // per-triplet loss multiplier (w_hop_lw)
};

// Multiset of training positives. Pairs are stored distinct with a
// multiplicity and expanded lazily at batch time, which is equivalent to
// physical replication.
struct PositivePairTable {
    std::vector<PositivePair> pairs;
    uint64_t total_expanded = 0;
    PspMode mode = PspMode::one_hop;
};

// Unweighted-source modes: one edge per pair (twice for one_hop_x2). The
// caller passes G for the one_hop modes and G_SVD for svd_hop.
inline PositivePairTable build_psp(const BipartiteGraph& g, PspMode mode) {
    if (mode != PspMode::one_hop && mode != PspMode::one_hop_x2 && mode != PspMode::svd_hop)
        throw std::invalid_argument("build_psp: mode requires the weighted graph overload");
    uint32_t mult = mode == PspMode::one_hop_x2 ? 2 : 1;
    PositivePairTable t;
    t.mode = mode;
    for (uint32_t u = 0; u < g.n_users; ++u)
        for (uint32_t p : g.items_of_user[u]) {
            t.pairs.push_back({u, p, mult, 1.0});
            t.total_expanded += mult;
        }
    return t;
}

// Weighted-graph modes. w_ew realizes edge confidence as replication
// (multiplicity = edge weight); w_hop_lw keeps one occurrence per edge and
// records the weight as a loss multiplier instead; w_hop drops the weights.
inline PositivePairTable build_psp(const WeightedBipartiteGraph& g_hat, PspMode mode) {
    if (mode != PspMode::w_hop && mode != PspMode::w_hop_lw && mode != PspMode::w_ew)
        throw std::invalid_argument("build_psp: mode requires the plain graph overload");
    PositivePairTable t;
    t.mode = mode;
    for (uint32_t u = 0; u < g_hat.n_users; ++u)
        for (const auto& e : g_hat.edges_of_user[u]) {
            uint32_t mult = mode == PspMode::w_ew ? e.weight : 1;
            double scale = mode == PspMode::w_hop_lw ? static_cast<double>(e.weight) : 1.0;
            t.pairs.push_back({u, e.item, mult, scale});
            t.total_expanded += mult;
        }
    return t;
}

// Leakage guard: any pair present in val or test is removed entirely.
inline PositivePairTable exclude_eval_interactions(const PositivePairTable& psp, const InteractionDataset& val,
                                                   const InteractionDataset& test) {
    std::unordered_set<uint64_t> held_out;
    held_out.reserve(val.interactions.size() + test.interactions.size());
    for (const auto& it : val.interactions) held_out.insert(pair_key(it.user, it.item));
    for (const auto& it : test.interactions) held_out.insert(pair_key(it.user, it.item));

    PositivePairTable out;
    out.mode = psp.mode;
    out.pairs.reserve(psp.pairs.size());
    for (const auto& p : psp.pairs) {
        if (held_out.count(pair_key(p.user, p.item))) continue;
        out.pairs.push_back(p);
        out.total_expanded += p.multiplicity;
    }
    return out;
}

enum class WeightScheme { none, log, isw, edw, crw };

inline const char* to_string(WeightScheme s) {
    switch (s) {
        case WeightScheme::none: return "none";
        case WeightScheme::log: return "log";
        case WeightScheme::isw: return "isw";
        case WeightScheme::edw: return "edw";
        case WeightScheme::crw: return "crw";
    }
    return "?";
}

inline WeightScheme parse_weight_scheme(const std::string& s) {
    if (s == "none") return WeightScheme::none;
    if (s == "log") return WeightScheme::log;
    if (s == "isw") return WeightScheme::isw;
    if (s == "edw") return WeightScheme::edw;
    if (s == "crw") return WeightScheme::crw;
    throw std::invalid_argument("unknown weight scheme: " + s);
}

struct UserWeights {
    std::vector<double> t;
    WeightScheme scheme = WeightScheme::none;
    double sensitivity = 0.0;
    double cap = 0.0;

    static UserWeights uniform(uint32_t n_users) {
        UserWeights w;
        w.t.assign(n_users, 1.0);
        w.scheme = WeightScheme::none;
        w.sensitivity = 1.0;
        w.cap = 1.0;
        return w;
    }
};

// Activity-aware user weights over fused degrees d:
//   log: 1/ln(a*d + 1)      isw: 1/sqrt(a*d + 1)
//   edw: exp(-a*d)          crw: min(1/(a*d), cap)
// Natural log for the log scheme; a base change would only rescale t
// uniformly. Users with d = 0 never appear in the PSP; they get weight 0
// (weight 1 under scheme none, which ignores activity).
inline UserWeights compute_user_weights(std::span<const uint32_t> fused_degrees, WeightScheme scheme, double a,
                                        double cap) {
    if (a <= 0.0) throw std::invalid_argument("compute_user_weights: sensitivity must be positive");
    if (cap <= 0.0) throw std::invalid_argument("compute_user_weights: cap must be positive");
    UserWeights w;
    w.scheme = scheme;
    w.sensitivity = a;
    w.cap = cap;
    w.t.resize(fused_degrees.size());
    for (size_t u = 0; u < fused_degrees.size(); ++u) {
        double d = static_cast<double>(fused_degrees[u]);
        double v;
        if (scheme == WeightScheme::none) {
            v = 1.0;
        } else if (d == 0.0) {
            v = 0.0;
        } else {
            switch (scheme) {
                case WeightScheme::log: v = 1.0 / std::log(a * d + 1.0); break;
                case WeightScheme::isw: v = 1.0 / std::sqrt(a * d + 1.0); break;
                case WeightScheme::edw: v = std::exp(-a * d); break;
                case WeightScheme::crw: v = 1.0 / (a * d); break;
                default: v = 1.0; break;
            }
            v = std::clamp(v, 0.0, cap);
        }
        w.t[u] = v;
    }
    return w;
}

inline UserWeights compute_user_weights(const WeightedBipartiteGraph& g_hat, WeightScheme scheme, double a,
                                        double cap) {
    return compute_user_weights(std::span<const uint32_t>{g_hat.fused_degree}, scheme, a, cap);
}

// PSP quality against known per-user true-positive sets (synthetic data).
// acc = P(p in D_u | p in S_u+) over distinct pairs, cov = P(p in S_u+ |
// p in D_u). The weighted variants draw pairs proportional to multiplicity;
// weighted coverage normalizes by the maximal replication mass.
struct PspQuality {
    double acc = 0.0;
    double cov = 0.0;
    double acc_weighted = 0.0;
    double cov_weighted = 0.0;
};

inline PspQuality measure_psp_quality(const PositivePairTable& psp,
                                      const std::vector<std::vector<uint32_t>>& ground_truth) {
    if (psp.pairs.empty()) throw std::invalid_argument("measure_psp_quality: empty PSP");

    uint64_t n_true = 0, n_pairs = psp.pairs.size();
    uint64_t mass_true = 0, mass_total = 0;
    uint64_t covered = 0, covered_mass = 0;
    uint32_t max_mult = 1;
    for (const auto& p : psp.pairs) max_mult = std::max(max_mult, p.multiplicity);
    for (const auto& p : psp.pairs) {
        bool in_truth = p.user < ground_truth.size() &&
                        std::binary_search(ground_truth[p.user].begin(), ground_truth[p.user].end(), p.item);
        mass_total += p.multiplicity;
        if (in_truth) {
            ++n_true;
            mass_true += p.multiplicity;
            ++covered;
            covered_mass += p.multiplicity;
        }
    }
    uint64_t truth_total = 0;
    for (const auto& d : ground_truth) truth_total += d.size();

    PspQuality q;
    q.acc = static_cast<double>(n_true) / static_cast<double>(n_pairs);
    q.acc_weighted = static_cast<double>(mass_true) / static_cast<double>(mass_total);
    q.cov = truth_total ? static_cast<double>(covered) / static_cast<double>(truth_total) : 0.0;
    q.cov_weighted =
        truth_total ? static_cast<double>(covered_mass) / (static_cast<double>(max_mult) * truth_total) : 0.0;
    return q;
}

// Debug dump, one "u<TAB>p<TAB>multiplicity" line per pair.
inline void export_psp(const PositivePairTable& psp, std::ostream& os) {
    for (const auto& p : psp.pairs)
        os << p.user << '\t' << p.item << '\t' << p.multiplicity << '\t' << p.loss_scale << '\n';
}

}  // namespace pspns
