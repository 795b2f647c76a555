#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "pspns/io.hpp"
#include "pspns/matrix.hpp"
#include "pspns/rng.hpp"

namespace pspns {

struct EmbeddingModel {
    Matrix user;  // n_users x dim
    Matrix item;  // n_items x dim

    uint32_t dim() const { return user.cols; }
};

// Xavier-uniform on both tables: U(-b, b) with b = sqrt(6 / (2 dim)).
inline EmbeddingModel init_embeddings(uint32_t n_users, uint32_t n_items, uint32_t dim, uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("init_embeddings: dim must be positive");
    EmbeddingModel m{Matrix(n_users, dim), Matrix(n_items, dim)};
    double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(dim)));
    RandomStream rng(derive_seed(seed, "init"));
    for (double& x : m.user.data) x = rng.uniform(-bound, bound);
    for (double& x : m.item.data) x = rng.uniform(-bound, bound);
    return m;
}

struct Triplet {
    uint32_t user;
    uint32_t pos;
    uint32_t neg;
    double loss_scale = 1.0;  // per-pair multiplier (w_hop_lw), folded into t_eff
};

// numerically stable sigma(x) and ln sigma(x)
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
    // ln sigma(x) = -ln(1 + e^{-x}); keep the exponential argument <= 0
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

struct SparseGradient {
    // parallel arrays: touched row index + dense gradient block per row
    std::vector<uint32_t> user_rows;
    std::vector<double> user_grads;  // user_rows.size() * dim
    std::vector<uint32_t> item_rows;
    std::vector<double> item_grads;

    void clear() {
        user_rows.clear();
        user_grads.clear();
        item_rows.clear();
        item_grads.clear();
    }
};

struct BatchStats {
    double loss = 0.0;        // total batch loss (data term + L2 term)
    double mean_margin = 0.0;  // mean of m = e_u.(e_p+ - e_p-)
    size_t count = 0;
};

// BPR data term for one triplet: -t_eff * ln sigma(m). The L2 term
// 0.5 * l2 * (|e_u|^2 + |e_p+|^2 + |e_p-|^2) is charged per occurrence and is
// not scaled by t_eff. Gradients accumulate into out.
inline BatchStats bpr_batch(const EmbeddingModel& model, std::span<const Triplet> batch,
                            std::span<const double> user_weight, double l2, SparseGradient& out) {
    const uint32_t dim = model.dim();
    BatchStats stats;
    out.clear();
    out.user_rows.reserve(batch.size());
    out.user_grads.reserve(batch.size() * dim);
    out.item_rows.reserve(batch.size() * 2);
    out.item_grads.reserve(batch.size() * 2 * dim);
    for (const Triplet& t : batch) {
        std::span<const double> eu = model.user.row(t.user);
        std::span<const double> ep = model.item.row(t.pos);
        std::span<const double> en = model.item.row(t.neg);
        double margin = dot(eu, ep) - dot(eu, en);
        double t_eff = (t.user < user_weight.size() ? user_weight[t.user] : 1.0) * t.loss_scale;
        stats.loss += -t_eff * log_sigmoid(margin);
        stats.loss += 0.5 * l2 * (squared_norm(eu) + squared_norm(ep) + squared_norm(en));
        stats.mean_margin += margin;
        stats.count += 1;

        // d/dm [-t ln sigma(m)] = -t (1 - sigma(m))
        double coeff = -t_eff * (1.0 - sigmoid(margin));

        out.user_rows.push_back(t.user);
        size_t ub = out.user_grads.size();
        out.user_grads.resize(ub + dim);
        for (uint32_t k = 0; k < dim; ++k) out.user_grads[ub + k] = coeff * (ep[k] - en[k]) + l2 * eu[k];

        out.item_rows.push_back(t.pos);
        size_t pb = out.item_grads.size();
        out.item_grads.resize(pb + dim);
        for (uint32_t k = 0; k < dim; ++k) out.item_grads[pb + k] = coeff * eu[k] + l2 * ep[k];

        out.item_rows.push_back(t.neg);
        size_t nb = out.item_grads.size();
        out.item_grads.resize(nb + dim);
        for (uint32_t k = 0; k < dim; ++k) out.item_grads[nb + k] = -coeff * eu[k] + l2 * en[k];
    }
    if (stats.count > 0) stats.mean_margin /= static_cast<double>(stats.count);
    return stats;
}

// Plain SGD over a sparse gradient; rows repeated in the gradient are applied
// repeatedly (order of accumulation within the batch).
inline void sgd_step(EmbeddingModel& model, const SparseGradient& g, double lr) {
    const uint32_t dim = model.dim();
    for (size_t i = 0; i < g.user_rows.size(); ++i) {
        std::span<double> row = model.user.row_mut(g.user_rows[i]);
        const double* grad = g.user_grads.data() + i * dim;
        for (uint32_t k = 0; k < dim; ++k) row[k] -= lr * grad[k];
    }
    for (size_t i = 0; i < g.item_rows.size(); ++i) {
        std::span<double> row = model.item.row_mut(g.item_rows[i]);
        const double* grad = g.item_grads.data() + i * dim;
        for (uint32_t k = 0; k < dim; ++k) row[k] -= lr * grad[k];
    }
}

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Lazy (sparse) Adam: first and second moments are stored densely but only
// touched rows are updated per step. Bias correction uses the global step
// count, shared by all rows.
class AdamState {
public:
    AdamState() = default;
    AdamState(uint32_t n_users, uint32_t n_items, uint32_t dim, AdamConfig cfg)
        : cfg_(cfg),
          dim_(dim),
          m_user_(static_cast<size_t>(n_users) * dim, 0.0),
          v_user_(static_cast<size_t>(n_users) * dim, 0.0),
          m_item_(static_cast<size_t>(n_items) * dim, 0.0),
          v_item_(static_cast<size_t>(n_items) * dim, 0.0) {}

    uint64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

    // Duplicate rows within one batch are first summed so each parameter row
    // receives a single moment update per step.
    void step(EmbeddingModel& model, const SparseGradient& g) {
        ++step_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        apply(model.user, g.user_rows, g.user_grads, m_user_, v_user_, bc1, bc2);
        apply(model.item, g.item_rows, g.item_grads, m_item_, v_item_, bc1, bc2);
    }

private:
    void apply(Matrix& table, const std::vector<uint32_t>& rows, const std::vector<double>& grads,
               std::vector<double>& m, std::vector<double>& v, double bc1, double bc2) {
        scratch_rows_.clear();
        scratch_sum_.clear();
        for (size_t i = 0; i < rows.size(); ++i) {
            uint32_t r = rows[i];
            auto it = std::find(scratch_rows_.begin(), scratch_rows_.end(), r);
            size_t slot;
            if (it == scratch_rows_.end()) {
                slot = scratch_rows_.size();
                scratch_rows_.push_back(r);
                scratch_sum_.resize(scratch_sum_.size() + dim_, 0.0);
            } else {
                slot = static_cast<size_t>(it - scratch_rows_.begin());
            }
            const double* src = grads.data() + i * dim_;
            double* dst = scratch_sum_.data() + slot * dim_;
            for (uint32_t k = 0; k < dim_; ++k) dst[k] += src[k];
        }
        for (size_t i = 0; i < scratch_rows_.size(); ++i) {
            uint32_t r = scratch_rows_[i];
            const double* grad = scratch_sum_.data() + i * dim_;
            double* mr = m.data() + static_cast<size_t>(r) * dim_;
            double* vr = v.data() + static_cast<size_t>(r) * dim_;
            std::span<double> row = table.row_mut(r);
            for (uint32_t k = 0; k < dim_; ++k) {
                mr[k] = cfg_.beta1 * mr[k] + (1.0 - cfg_.beta1) * grad[k];
                vr[k] = cfg_.beta2 * vr[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
                double mhat = mr[k] / bc1;
                double vhat = vr[k] / bc2;
                row[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    AdamConfig cfg_;
    uint32_t dim_ = 0;
    uint64_t step_ = 0;
    std::vector<double> m_user_, v_user_, m_item_, v_item_;
    std::vector<uint32_t> scratch_rows_;
    std::vector<double> scratch_sum_;
};

// Top-k by score e_u.e_p over items not in `exclude` (sorted). Ties toward
// the lower item index; result sorted by rank.
inline std::vector<uint32_t> recommend_topk(const EmbeddingModel& model, uint32_t u,
                                            const std::vector<uint32_t>& exclude, uint32_t k) {
    std::span<const double> eu = model.user.row(u);
    std::vector<std::pair<double, uint32_t>> scored;
    scored.reserve(model.item.rows);
    for (uint32_t p = 0; p < model.item.rows; ++p) {
        if (std::binary_search(exclude.begin(), exclude.end(), p)) continue;
        scored.push_back({dot(eu, model.item.row(p)), p});
    }
    auto better = [](const std::pair<double, uint32_t>& a, const std::pair<double, uint32_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    uint32_t kk = std::min<uint32_t>(k, static_cast<uint32_t>(scored.size()));
    std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(), better);
    std::vector<uint32_t> out(kk);
    for (uint32_t i = 0; i < kk; ++i) out[i] = scored[i].second;
    return out;
}

inline constexpr char kCheckpointMagic[9] = "PSPNSCK1";

inline void save_checkpoint(const EmbeddingModel& model, std::ostream& os) {
    io::write_magic(os, kCheckpointMagic);
    io::write_u32(os, 1);  // version
    io::write_u32(os, model.user.rows);
    io::write_u32(os, model.item.rows);
    io::write_u32(os, model.dim());
    for (double x : model.user.data) io::write_f64(os, x);
    for (double x : model.item.data) io::write_f64(os, x);
}

inline EmbeddingModel load_checkpoint(std::istream& is) {
    io::expect_magic(is, kCheckpointMagic, "checkpoint");
    uint32_t version = io::read_u32(is);
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
    uint32_t n_users = io::read_u32(is);
    uint32_t n_items = io::read_u32(is);
    uint32_t dim = io::read_u32(is);
    EmbeddingModel m{Matrix(n_users, dim), Matrix(n_items, dim)};
    for (double& x : m.user.data) x = io::read_f64(is);
    for (double& x : m.item.data) x = io::read_f64(is);
    return m;
}

}  // namespace pspns
