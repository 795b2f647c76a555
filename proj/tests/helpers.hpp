#pragma once

// Small construction and oracle utilities shared by the test binaries. The
// oracles here deliberately avoid the library's own algorithms: dense
// reference ranking uses a full stable sort, metrics are recomputed from
// first principles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pspns/dataset.hpp"
#include "pspns/linalg.hpp"
#include "pspns/matrix.hpp"
#include "pspns/model.hpp"
#include "pspns/rng.hpp"

namespace testutil {

inline pspns::NormalizedMatrix dense_to_sparse(const pspns::Matrix& m) {
    pspns::NormalizedMatrix out;
    out.n_rows = m.rows;
    out.n_cols = m.cols;
    out.row_offsets.resize(m.rows + 1);
    out.row_offsets[0] = 0;
    for (uint32_t i = 0; i < m.rows; ++i) {
        for (uint32_t j = 0; j < m.cols; ++j) {
            double v = m.at(i, j);
            if (v != 0.0) {
                out.col_indices.push_back(j);
                out.values.push_back(v);
            }
        }
        out.row_offsets[i + 1] = out.col_indices.size();
    }
    return out;
}

inline pspns::Matrix random_matrix(uint32_t rows, uint32_t cols, uint64_t seed) {
    pspns::Matrix m(rows, cols);
    pspns::RandomStream rng(seed);
    for (double& x : m.data) x = rng.normal();
    return m;
}

// C = A * B^T, so a rank-k product of (rows x k) and (cols x k) factors
inline pspns::Matrix matmul_nt(const pspns::Matrix& a, const pspns::Matrix& b) {
    pspns::Matrix c(a.rows, b.rows);
    for (uint32_t i = 0; i < a.rows; ++i)
        for (uint32_t j = 0; j < b.rows; ++j) c.at(i, j) = pspns::dot(a.row(i), b.row(j));
    return c;
}

inline double frobenius(const pspns::Matrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

inline pspns::Matrix reconstruct_dense(const pspns::TruncatedFactors& f) {
    pspns::Matrix m(f.user_factors.rows, f.item_factors.rows);
    for (uint32_t i = 0; i < m.rows; ++i) {
        std::vector<double> row = pspns::reconstruct_row(f, i);
        for (uint32_t j = 0; j < m.cols; ++j) m.at(i, j) = row[j];
    }
    return m;
}

// Reference ranking metrics: full stable sort by (score desc, index asc),
// prefix scan. No shared code with evaluate()/recommend_topk().
struct RefMetrics {
    std::vector<double> recall;
    std::vector<double> precision;
    uint32_t n_evaluable = 0;
};

inline RefMetrics reference_metrics(const pspns::EmbeddingModel& model,
                                    const std::vector<std::vector<uint32_t>>& eval_sets,
                                    const std::vector<std::vector<uint32_t>>& exclude_sets,
                                    const std::vector<uint32_t>& ks) {
    RefMetrics ref;
    ref.recall.assign(ks.size(), 0.0);
    ref.precision.assign(ks.size(), 0.0);
    for (uint32_t u = 0; u < model.user.rows; ++u) {
        if (eval_sets[u].empty()) continue;
        std::vector<std::pair<double, uint32_t>> scored;
        for (uint32_t p = 0; p < model.item.rows; ++p) {
            bool excluded = false;
            for (uint32_t e : exclude_sets[u])
                if (e == p) excluded = true;
            if (excluded) continue;
            double s = 0.0;
            for (uint32_t k = 0; k < model.dim(); ++k) s += model.user.at(u, k) * model.item.at(p, k);
            scored.push_back({s, p});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            size_t k = std::min<size_t>(ks[ki], scored.size());
            size_t hits = 0;
            for (size_t i = 0; i < k; ++i) {
                for (uint32_t e : eval_sets[u])
                    if (e == scored[i].second) ++hits;
            }
            ref.recall[ki] += static_cast<double>(hits) / eval_sets[u].size();
            ref.precision[ki] += static_cast<double>(hits) / ks[ki];
        }
        ++ref.n_evaluable;
    }
    if (ref.n_evaluable) {
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            ref.recall[ki] /= ref.n_evaluable;
            ref.precision[ki] /= ref.n_evaluable;
        }
    }
    return ref;
}

inline pspns::InteractionDataset dataset_from_pairs(std::vector<std::pair<uint32_t, uint32_t>> pairs,
                                                    uint32_t n_users, uint32_t n_items) {
    std::vector<pspns::Interaction> v;
    v.reserve(pairs.size());
    for (auto [u, p] : pairs) v.push_back({u, p});
    return pspns::make_dataset(std::move(v), n_users, n_items);
}

}  // namespace testutil
