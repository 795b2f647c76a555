#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pspns/dataset.hpp"
#include "pspns/linalg.hpp"

namespace pspns {

// Per-user neighbor selection over the SVD-reconstructed preference rows.
// K is the user's historical interaction count, so activity in the
// reconstructed graph matches the original one; users without train
// interactions get empty lists. Already-interacted items stay eligible, and
// ties break toward the lower item index.
inline BipartiteGraph adaptive_topk_select(const TruncatedFactors& factors, const BipartiteGraph& g) {
    if (factors.user_factors.rows < g.n_users || factors.item_factors.rows != g.n_items)
        throw std::invalid_argument("adaptive_topk_select: factors do not cover the graph");

    BipartiteGraph out;
    out.n_users = g.n_users;
    out.n_items = g.n_items;
    out.items_of_user.resize(g.n_users);
    out.row_degree.assign(g.n_users, 0);
    out.col_degree.assign(g.n_items, 0);

    std::vector<double> scores(g.n_items);
    std::vector<uint32_t> idx(g.n_items);
    for (uint32_t u = 0; u < g.n_users; ++u) {
        uint32_t k = g.row_degree[u];
        if (k == 0) continue;
        reconstruct_row_into(factors, u, scores);
        std::iota(idx.begin(), idx.end(), 0u);
        auto better = [&](uint32_t a, uint32_t b) {
            return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
        };
        if (k < g.n_items) std::nth_element(idx.begin(), idx.begin() + k, idx.end(), better);
        auto& adj = out.items_of_user[u];
        adj.assign(idx.begin(), idx.begin() + std::min<size_t>(k, g.n_items));
        std::sort(adj.begin(), adj.end());
        out.row_degree[u] = static_cast<uint32_t>(adj.size());
        for (uint32_t p : adj) ++out.col_degree[p];
    }
    return out;
}

struct WeightedEdge {
    uint32_t item;
    uint32_t weight;  // 1 or s
    bool operator==(const WeightedEdge&) const = default;
};

// Fusion of the observed graph with the reconstructed one: weight s where
// both agree, 1 where exactly one contains the edge.
struct WeightedBipartiteGraph {
    std::vector<std::vector<WeightedEdge>> edges_of_user;  // sorted by item
    std::vector<uint32_t> fused_degree;                    // |P_u| in the fused graph
    uint32_t n_users = 0;
    uint32_t n_items = 0;
    uint32_t weight_s = 1;
};

inline WeightedBipartiteGraph fuse_graphs(const BipartiteGraph& g, const BipartiteGraph& g_svd, uint32_t s) {
    if (g.n_users != g_svd.n_users || g.n_items != g_svd.n_items)
        throw std::invalid_argument("fuse_graphs: mismatched dimensions");
    if (s < 1) throw std::invalid_argument("fuse_graphs: s must be >= 1");

    WeightedBipartiteGraph out;
    out.n_users = g.n_users;
    out.n_items = g.n_items;
    out.weight_s = s;
    out.edges_of_user.resize(g.n_users);
    out.fused_degree.assign(g.n_users, 0);
    for (uint32_t u = 0; u < g.n_users; ++u) {
        const auto& a = g.items_of_user[u];
        const auto& b = g_svd.items_of_user[u];
        auto& fused = out.edges_of_user[u];
        fused.reserve(a.size() + b.size());
        size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
            if (j == b.size() || (i < a.size() && a[i] < b[j])) {
                fused.push_back({a[i++], 1});
            } else if (i == a.size() || b[j] < a[i]) {
                fused.push_back({b[j++], 1});
            } else {
                fused.push_back({a[i], s});
                ++i;
                ++j;
            }
        }
        out.fused_degree[u] = static_cast<uint32_t>(fused.size());
    }
    return out;
}

// Debug dump, one "u<TAB>p<TAB>w" line per edge.
inline void export_weighted_graph(const WeightedBipartiteGraph& g, std::ostream& os) {
    for (uint32_t u = 0; u < g.n_users; ++u)
        for (const auto& e : g.edges_of_user[u]) os << u << '\t' << e.item << '\t' << e.weight << '\n';
}

}  // namespace pspns
