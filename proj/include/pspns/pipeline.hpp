#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pspns/dataset.hpp"
#include "pspns/graph.hpp"
#include "pspns/linalg.hpp"
#include "pspns/psp.hpp"
#include "pspns/train_eval.hpp"

namespace pspns {

// Rethrows any stage failure tagged with the stage name, so a CLI error
// message points at the failing step.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error("[stage " + stage + "] " + e.what());
    }
}

struct PipelineArtifacts {
    SparseInteractionMatrix train_matrix;
    BipartiteGraph g;                            // observed train graph
    std::optional<TruncatedFactors> factors;     // absent for one_hop modes
    std::optional<BipartiteGraph> g_svd;
    std::optional<WeightedBipartiteGraph> fused; // absent unless mode fuses
    PositivePairTable psp;                       // after the leakage guard
    uint64_t removed_by_guard = 0;
    UserWeights weights;
};

inline bool mode_uses_svd(PspMode mode) { return mode != PspMode::one_hop && mode != PspMode::one_hop_x2; }

inline bool mode_uses_fusion(PspMode mode) {
    return mode == PspMode::w_hop || mode == PspMode::w_hop_lw || mode == PspMode::w_ew;
}

// normalize -> randomized SVD -> adaptive top-K -> fuse -> PSP -> leakage
// guard -> user weights. Stages not needed by cfg.mode are skipped. The SVD
// rank is clamped to the matrix dimensions so small datasets run under the
// default q.
inline PipelineArtifacts build_pipeline(const TrainConfig& cfg, const SplitDataset& split) {
    cfg.validate();
    PipelineArtifacts art;

    auto mg = run_stage("build_graph", [&] { return build_matrix_and_graph(split.train); });
    art.train_matrix = std::move(mg.first);
    art.g = std::move(mg.second);

    if (mode_uses_svd(cfg.mode)) {
        NormalizedMatrix norm =
            run_stage("normalize", [&] { return normalize_adjacency(art.train_matrix, art.g); });
        uint32_t max_rank = std::min(art.g.n_users, art.g.n_items);
        uint32_t rank = std::min(cfg.svd_rank, max_rank);
        art.factors = run_stage("svd", [&] {
            return randomized_svd(norm, rank, cfg.svd_oversample, cfg.svd_power_iters,
                                  derive_seed(cfg.seed, "sketch"));
        });
        art.g_svd = run_stage("topk", [&] { return adaptive_topk_select(*art.factors, art.g); });
    }

    if (mode_uses_fusion(cfg.mode)) {
        art.fused = run_stage("fuse", [&] { return fuse_graphs(art.g, *art.g_svd, cfg.fuse_s); });
        art.psp = run_stage("psp", [&] { return build_psp(*art.fused, cfg.mode); });
    } else if (cfg.mode == PspMode::svd_hop) {
        art.psp = run_stage("psp", [&] { return build_psp(*art.g_svd, cfg.mode); });
    } else {
        art.psp = run_stage("psp", [&] { return build_psp(art.g, cfg.mode); });
    }

    art.removed_by_guard = run_stage("leakage_guard", [&] {
        uint64_t before = art.psp.total_expanded;
        art.psp = exclude_eval_interactions(art.psp, split.val, split.test);
        return before - art.psp.total_expanded;
    });

    // Activity weights come from the fused degrees when a fused graph
    // exists; otherwise from the PSP source graph's degrees.
    art.weights = run_stage("weights", [&] {
        if (cfg.scheme == WeightScheme::none) return UserWeights::uniform(art.g.n_users);
        if (art.fused) return compute_user_weights(*art.fused, cfg.scheme, cfg.weight_a, cfg.weight_cap);
        const BipartiteGraph& src = cfg.mode == PspMode::svd_hop ? *art.g_svd : art.g;
        return compute_user_weights(std::span<const uint32_t>{src.row_degree}, cfg.scheme, cfg.weight_a,
                                    cfg.weight_cap);
    });

    if (art.psp.pairs.empty())
        throw std::runtime_error("[stage leakage_guard] no training pairs remain after the guard");
    return art;
}

// End-to-end: pipeline, training, final test-set evaluation.
struct RunOutcome {
    PipelineArtifacts artifacts;
    TrainResult trained;
    EvalReport test;
    SegmentReport segments;
    uint32_t n_inactive = 0;
};

inline RunOutcome run_training(const TrainConfig& cfg, const SplitDataset& split, double inactive_fraction = 0.2) {
    RunOutcome out;
    out.artifacts = build_pipeline(cfg, split);
    out.trained = run_stage("train", [&] {
        return train(cfg, out.artifacts.g, split, out.artifacts.psp, out.artifacts.weights);
    });
    std::vector<std::vector<uint32_t>> test_sets = user_item_sets(split.test);
    test_sets.resize(out.artifacts.g.n_users);
    std::vector<std::vector<uint32_t>> train_sets = out.artifacts.g.items_of_user;
    out.test = run_stage("evaluate", [&] {
        return evaluate(out.trained.model, test_sets, train_sets, cfg.ks);
    });
    out.n_inactive = static_cast<uint32_t>(inactive_fraction * out.artifacts.g.n_users);
    out.segments = run_stage("segments", [&] {
        return segment_report(out.trained.model, test_sets, train_sets, out.artifacts.g.row_degree,
                              out.n_inactive, cfg.ks);
    });
    return out;
}

}  // namespace pspns
