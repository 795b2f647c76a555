#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pspns/dataset.hpp"
#include "pspns/model.hpp"
#include "pspns/psp.hpp"
#include "pspns/rng.hpp"
#include "pspns/sampler.hpp"

namespace pspns {

struct TrainConfig {
    // embedding / optimizer
    uint32_t dim = 64;
    double lr = 0.001;
    uint32_t batch_size = 2048;
    double l2 = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // schedule
    uint32_t max_epochs = 200;
    uint32_t patience = 10;
    uint32_t eval_every = 1;
    std::vector<uint32_t> ks = {20, 30};
    // graph construction
    uint32_t svd_rank = 100;  // q
    uint32_t svd_oversample = 10;
    uint32_t svd_power_iters = 4;
    uint32_t fuse_s = 3;
    // reweighting
    PspMode mode = PspMode::w_ew;
    WeightScheme scheme = WeightScheme::log;
    double weight_a = 0.01;
    double weight_cap = 1e4;
    // sampling
    NegativeSamplerConfig sampler;
    uint64_t seed = 0;

    void validate() const {
        if (dim == 0) throw std::invalid_argument("config: dim must be >= 1");
        if (!(lr > 0.0)) throw std::invalid_argument("config: lr must be > 0");
        if (batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
        if (l2 < 0.0) throw std::invalid_argument("config: l2 must be >= 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("config: beta1 must be in [0,1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("config: beta2 must be in [0,1)");
        if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be > 0");
        if (max_epochs == 0) throw std::invalid_argument("config: max_epochs must be >= 1");
        if (patience == 0) throw std::invalid_argument("config: patience must be >= 1");
        if (eval_every == 0) throw std::invalid_argument("config: eval_every must be >= 1");
        if (ks.empty()) throw std::invalid_argument("config: ks must be non-empty");
        for (size_t i = 0; i < ks.size(); ++i) {
            if (ks[i] == 0) throw std::invalid_argument("config: every k must be >= 1");
            if (i > 0 && ks[i] <= ks[i - 1]) throw std::invalid_argument("config: ks must be strictly ascending");
        }
        if (svd_rank == 0) throw std::invalid_argument("config: q must be >= 1");
        if (fuse_s == 0) throw std::invalid_argument("config: s must be >= 1");
        if (!(weight_a > 0.0)) throw std::invalid_argument("config: a must be > 0");
        if (!(weight_cap > 0.0)) throw std::invalid_argument("config: cap must be > 0");
        if (sampler.popularity_exponent < 0.0)
            throw std::invalid_argument("config: popularity exponent must be >= 0");
        if (sampler.candidate_count == 0)
            throw std::invalid_argument("config: candidate count must be >= 1");
    }
};

struct EvalReport {
    std::vector<uint32_t> ks;
    std::vector<double> recall;     // parallel to ks
    std::vector<double> precision;  // parallel to ks
    uint32_t n_evaluable = 0;
};

namespace detail {

// all_users selects every row; otherwise exactly the ids in `users`, which
// may legitimately be empty (an empty segment)
inline EvalReport evaluate_impl(const EmbeddingModel& model,
                                const std::vector<std::vector<uint32_t>>& eval_sets,
                                const std::vector<std::vector<uint32_t>>& exclude_sets,
                                const std::vector<uint32_t>& ks, bool all_users,
                                std::span<const uint32_t> users) {
    if (ks.empty()) throw std::invalid_argument("evaluate: ks must be non-empty");
    if (eval_sets.size() != model.user.rows || exclude_sets.size() != model.user.rows)
        throw std::invalid_argument("evaluate: per-user set count must match the user table");
    EvalReport rep;
    rep.ks = ks;
    rep.recall.assign(ks.size(), 0.0);
    rep.precision.assign(ks.size(), 0.0);
    uint32_t max_k = *std::max_element(ks.begin(), ks.end());

    auto eval_user = [&](uint32_t u) {
        const std::vector<uint32_t>& truth = eval_sets[u];
        if (truth.empty()) return;
        std::vector<uint32_t> top = recommend_topk(model, u, exclude_sets[u], max_k);
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            uint32_t k = std::min<uint32_t>(ks[ki], static_cast<uint32_t>(top.size()));
            size_t hits = 0;
            for (uint32_t i = 0; i < k; ++i)
                if (std::binary_search(truth.begin(), truth.end(), top[i])) ++hits;
            rep.recall[ki] += static_cast<double>(hits) / static_cast<double>(truth.size());
            rep.precision[ki] += static_cast<double>(hits) / static_cast<double>(ks[ki]);
        }
        ++rep.n_evaluable;
    };

    if (all_users) {
        for (uint32_t u = 0; u < model.user.rows; ++u) eval_user(u);
    } else {
        for (uint32_t u : users) {
            if (u >= model.user.rows) throw std::out_of_range("evaluate: user index out of range");
            eval_user(u);
        }
    }
    if (rep.n_evaluable > 0) {
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            rep.recall[ki] /= rep.n_evaluable;
            rep.precision[ki] /= rep.n_evaluable;
        }
    }
    return rep;
}

}  // namespace detail

// Macro-averaged Recall@k / Precision@k over users with at least one eval
// item. Ranking excludes each user's entries in exclude_sets (sorted vectors).
inline EvalReport evaluate(const EmbeddingModel& model, const std::vector<std::vector<uint32_t>>& eval_sets,
                           const std::vector<std::vector<uint32_t>>& exclude_sets,
                           const std::vector<uint32_t>& ks) {
    return detail::evaluate_impl(model, eval_sets, exclude_sets, ks, true, {});
}

// Same metrics restricted to the given user ids; an empty list yields an
// empty report rather than falling back to all users.
inline EvalReport evaluate(const EmbeddingModel& model, const std::vector<std::vector<uint32_t>>& eval_sets,
                           const std::vector<std::vector<uint32_t>>& exclude_sets,
                           const std::vector<uint32_t>& ks, std::span<const uint32_t> users) {
    return detail::evaluate_impl(model, eval_sets, exclude_sets, ks, false, users);
}

struct SegmentReport {
    EvalReport inactive;
    EvalReport other;
    uint32_t n_inactive = 0;
};

// Users sorted ascending by train degree (ties by index); the first
// n_inactive form the inactive segment.
inline SegmentReport segment_report(const EmbeddingModel& model, const std::vector<std::vector<uint32_t>>& eval_sets,
                                    const std::vector<std::vector<uint32_t>>& exclude_sets,
                                    const std::vector<uint32_t>& train_degrees, uint32_t n_inactive,
                                    const std::vector<uint32_t>& ks) {
    if (train_degrees.size() != model.user.rows)
        throw std::invalid_argument("segment_report: degree count must match the user table");
    if (n_inactive > model.user.rows) throw std::invalid_argument("segment_report: n_inactive exceeds user count");
    std::vector<uint32_t> order(model.user.rows);
    for (uint32_t u = 0; u < model.user.rows; ++u) order[u] = u;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        if (train_degrees[a] != train_degrees[b]) return train_degrees[a] < train_degrees[b];
        return a < b;
    });
    std::vector<uint32_t> inactive(order.begin(), order.begin() + n_inactive);
    std::vector<uint32_t> other(order.begin() + n_inactive, order.end());
    SegmentReport rep;
    rep.n_inactive = n_inactive;
    rep.inactive = evaluate(model, eval_sets, exclude_sets, ks, inactive);
    rep.other = evaluate(model, eval_sets, exclude_sets, ks, other);
    return rep;
}

struct EvalPoint {
    uint32_t epoch = 0;
    double train_loss = 0.0;  // mean per-triplet loss over the epoch
    EvalReport val;
};

struct TrainResult {
    EmbeddingModel model;  // best-validation checkpoint
    std::vector<EvalPoint> history;
    uint32_t best_epoch = 0;
    double best_metric = 0.0;  // validation recall at ks[0]
    bool stopped_early = false;
};

namespace detail {

// pair indices repeated by multiplicity; one epoch = one pass over this
inline std::vector<uint32_t> expanded_stream(const PositivePairTable& psp) {
    std::vector<uint32_t> stream;
    stream.reserve(psp.total_expanded);
    for (uint32_t i = 0; i < psp.pairs.size(); ++i)
        for (uint32_t c = 0; c < psp.pairs[i].multiplicity; ++c) stream.push_back(i);
    return stream;
}

inline void shuffle_in_place(std::vector<uint32_t>& v, RandomStream& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.uniform_index(static_cast<uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

// distinct positives per user as sorted vectors
inline std::vector<std::vector<uint32_t>> psp_positive_sets(const PositivePairTable& psp, uint32_t n_users) {
    std::vector<std::vector<uint32_t>> sets(n_users);
    for (const PositivePair& p : psp.pairs) sets[p.user].push_back(p.item);
    for (auto& s : sets) std::sort(s.begin(), s.end());
    return sets;
}

}  // namespace detail

// Weighted BPR training over the expanded PSP stream with early stopping on
// validation recall at ks[0]. Deterministic given cfg.seed: shuffle and
// sampler streams are derived per epoch, initialization from the root seed.
inline TrainResult train(const TrainConfig& cfg, const BipartiteGraph& g, const SplitDataset& split,
                         const PositivePairTable& psp, const UserWeights& weights) {
    cfg.validate();
    if (psp.pairs.empty()) throw std::invalid_argument("train: PSP is empty");
    if (weights.t.size() != g.n_users) throw std::invalid_argument("train: weight count must match user count");
    const uint32_t n_users = g.n_users;
    const uint32_t n_items = g.n_items;

    std::vector<std::vector<uint32_t>> train_sets(n_users);
    for (uint32_t u = 0; u < n_users; ++u) train_sets[u] = g.items_of_user[u];
    std::vector<std::vector<uint32_t>> val_sets = user_item_sets(split.val);
    val_sets.resize(n_users);
    std::vector<std::vector<uint32_t>> psp_sets = detail::psp_positive_sets(psp, n_users);
    const std::vector<std::vector<uint32_t>>& excl =
        cfg.sampler.exclude_psp_positives ? psp_sets : train_sets;

    EmbeddingModel model = init_embeddings(n_users, n_items, cfg.dim, cfg.seed);
    AdamState adam(n_users, n_items, cfg.dim, AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps});
    PopularityDist pop;
    if (cfg.sampler.kind == SamplerKind::popularity)
        pop = PopularityDist(g.col_degree, cfg.sampler.popularity_exponent);

    std::vector<uint32_t> stream = detail::expanded_stream(psp);
    std::vector<Triplet> batch;
    SparseGradient grad;

    TrainResult result;
    result.best_metric = -std::numeric_limits<double>::infinity();
    EmbeddingModel best = model;
    uint32_t evals_since_best = 0;

    for (uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        RandomStream shuffle_rng(derive_seed(cfg.seed, "shuffle", epoch));
        detail::shuffle_in_place(stream, shuffle_rng);
        RandomStream neg_rng(derive_seed(cfg.seed, "sampler", epoch));

        double epoch_loss = 0.0;
        size_t epoch_triplets = 0;
        for (size_t begin = 0; begin < stream.size(); begin += cfg.batch_size) {
            size_t end = std::min(begin + cfg.batch_size, stream.size());
            batch.clear();
            for (size_t i = begin; i < end; ++i) {
                const PositivePair& p = psp.pairs[stream[i]];
                uint32_t neg;
                switch (cfg.sampler.kind) {
                    case SamplerKind::uniform:
                        neg = sample_uniform(n_items, excl[p.user], neg_rng);
                        break;
                    case SamplerKind::popularity:
                        neg = pop.sample(excl[p.user], neg_rng);
                        break;
                    case SamplerKind::dynamic: {
                        std::span<const double> eu = model.user.row(p.user);
                        neg = sample_dynamic(
                            n_items, excl[p.user],
                            [&](uint32_t item) { return dot(eu, model.item.row(item)); },
                            cfg.sampler.candidate_count, neg_rng);
                        break;
                    }
                    default:
                        throw std::logic_error("train: unhandled sampler kind");
                }
                batch.push_back(Triplet{p.user, p.item, neg, p.loss_scale});
            }
            BatchStats stats = bpr_batch(model, batch, weights.t, cfg.l2, grad);
            if (!std::isfinite(stats.loss))
                throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
            adam.step(model, grad);
            epoch_loss += stats.loss;
            epoch_triplets += stats.count;
        }

        bool do_eval = (epoch % cfg.eval_every == 0) || epoch == cfg.max_epochs;
        if (!do_eval) continue;

        EvalPoint point;
        point.epoch = epoch;
        point.train_loss = epoch_triplets > 0 ? epoch_loss / static_cast<double>(epoch_triplets) : 0.0;
        point.val = evaluate(model, val_sets, train_sets, cfg.ks);
        double metric = point.val.recall[0];
        result.history.push_back(std::move(point));

        if (metric > result.best_metric) {
            result.best_metric = metric;
            result.best_epoch = epoch;
            best = model;
            evals_since_best = 0;
        } else {
            ++evals_since_best;
            if (evals_since_best >= cfg.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    result.model = std::move(best);
    return result;
}

struct MarginGroup {
    double t = 1.0;  // user weight shared by the group
    double before = 0.0;
    double after = 0.0;
    size_t count = 0;

    double gain() const { return after - before; }
};

struct MarginProbe {
    double before = 0.0;
    double after = 0.0;
    std::vector<MarginGroup> groups;  // ascending by t

    double gain() const { return after - before; }
};

inline double mean_margin(const EmbeddingModel& model, std::span<const Triplet> batch) {
    double acc = 0.0;
    for (const Triplet& t : batch) {
        std::span<const double> eu = model.user.row(t.user);
        acc += dot(eu, model.item.row(t.pos)) - dot(eu, model.item.row(t.neg));
    }
    return batch.empty() ? 0.0 : acc / static_cast<double>(batch.size());
}

// One plain SGD probe step (l2 = 0; Adam preconditioning would mask the
// first-order behaviour) on a cloned model; margins reported before/after,
// grouped by each triplet's user weight.
inline MarginProbe margin_probe(const EmbeddingModel& model, std::span<const Triplet> batch,
                                std::span<const double> user_weight, double eta) {
    if (!(eta >= 0.0) || eta > 1e-2) throw std::invalid_argument("margin_probe: eta must be in [0, 1e-2]");
    if (batch.empty()) throw std::invalid_argument("margin_probe: empty batch");
    EmbeddingModel probe = model;
    MarginProbe out;
    out.before = mean_margin(probe, batch);

    SparseGradient grad;
    bpr_batch(probe, batch, user_weight, 0.0, grad);
    sgd_step(probe, grad, eta);
    out.after = mean_margin(probe, batch);

    std::vector<double> ts;
    for (const Triplet& t : batch) {
        double w = t.user < user_weight.size() ? user_weight[t.user] : 1.0;
        if (std::find(ts.begin(), ts.end(), w) == ts.end()) ts.push_back(w);
    }
    std::sort(ts.begin(), ts.end());
    for (double w : ts) {
        MarginGroup grp;
        grp.t = w;
        for (const Triplet& t : batch) {
            double tw = t.user < user_weight.size() ? user_weight[t.user] : 1.0;
            if (tw != w) continue;
            std::span<const double> eu0 = model.user.row(t.user);
            std::span<const double> eu1 = probe.user.row(t.user);
            grp.before += dot(eu0, model.item.row(t.pos)) - dot(eu0, model.item.row(t.neg));
            grp.after += dot(eu1, probe.item.row(t.pos)) - dot(eu1, probe.item.row(t.neg));
            grp.count += 1;
        }
        if (grp.count > 0) {
            grp.before /= static_cast<double>(grp.count);
            grp.after /= static_cast<double>(grp.count);
        }
        out.groups.push_back(grp);
    }
    return out;
}

}  // namespace pspns
