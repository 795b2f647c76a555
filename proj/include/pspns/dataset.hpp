#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pspns/io.hpp"
#include "pspns/rng.hpp"

namespace pspns {

inline uint64_t pair_key(uint32_t user, uint32_t item) {
    return (static_cast<uint64_t>(user) << 32) | item;
}

// Raw-string id <-> dense index tables, built once over the full dataset so
// indices stay stable across splits.
struct IdMaps {
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, uint32_t> user_index;
    std::unordered_map<std::string, uint32_t> item_index;
};

struct Interaction {
    uint32_t user;
    uint32_t item;
    bool operator==(const Interaction&) const = default;
};

struct InteractionDataset {
    std::vector<Interaction> interactions;
    uint32_t n_users = 0;
    uint32_t n_items = 0;
    std::shared_ptr<const IdMaps> ids;  // null for synthetic index-space data
};

// Builds a dataset directly from index pairs (tests and the synthetic
// generator). Duplicates are collapsed, first occurrence wins.
inline InteractionDataset make_dataset(std::vector<Interaction> pairs, uint32_t n_users, uint32_t n_items) {
    std::unordered_set<uint64_t> seen;
    seen.reserve(pairs.size());
    InteractionDataset ds;
    ds.n_users = n_users;
    ds.n_items = n_items;
    ds.interactions.reserve(pairs.size());
    for (const auto& it : pairs) {
        if (it.user >= n_users || it.item >= n_items)
            throw std::invalid_argument("make_dataset: index out of range");
        if (seen.insert(pair_key(it.user, it.item)).second) ds.interactions.push_back(it);
    }
    return ds;
}

enum class FileFormat { tsv, csv };

namespace detail {

inline bool split_fields(const std::string& line, char sep, std::string& a, std::string& b) {
    size_t p1 = line.find(sep);
    if (p1 == std::string::npos) return false;
    size_t p2 = line.find(sep, p1 + 1);
    a = line.substr(0, p1);
    b = (p2 == std::string::npos) ? line.substr(p1 + 1) : line.substr(p1 + 1, p2 - p1 - 1);
    // strip a trailing \r left by CRLF files
    if (!b.empty() && b.back() == '\r') b.pop_back();
    return !a.empty() && !b.empty();
}

}  // namespace detail

// One interaction per line, "raw_user<sep>raw_item"; extra columns ignored,
// '#' lines ignored. Ids are remapped to dense 0-based indices in
// first-appearance order; duplicate pairs are collapsed.
inline InteractionDataset load_interactions(const std::string& path, FileFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_interactions: cannot open " + path);
    char sep = format == FileFormat::tsv ? '\t' : ',';

    auto maps = std::make_shared<IdMaps>();
    InteractionDataset ds;
    std::unordered_set<uint64_t> seen;
    std::string line, raw_user, raw_item;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        if (!detail::split_fields(line, sep, raw_user, raw_item))
            throw std::runtime_error("load_interactions: malformed line " + std::to_string(line_no) +
                                     " in " + path);
        auto [uit, unew] = maps->user_index.try_emplace(raw_user, static_cast<uint32_t>(maps->user_ids.size()));
        if (unew) maps->user_ids.push_back(raw_user);
        auto [iit, inew] = maps->item_index.try_emplace(raw_item, static_cast<uint32_t>(maps->item_ids.size()));
        if (inew) maps->item_ids.push_back(raw_item);
        uint32_t u = uit->second, p = iit->second;
        if (seen.insert(pair_key(u, p)).second) ds.interactions.push_back({u, p});
    }
    if (ds.interactions.empty())
        throw std::runtime_error("load_interactions: no interactions in " + path);
    ds.n_users = static_cast<uint32_t>(maps->user_ids.size());
    ds.n_items = static_cast<uint32_t>(maps->item_ids.size());
    ds.ids = std::move(maps);
    return ds;
}

struct SplitRatios {
    double train;
    double val;
    double test;
};

struct SplitDataset {
    InteractionDataset train;
    InteractionDataset val;
    InteractionDataset test;
    uint64_t split_seed = 0;
};

// Global uniform shuffle under the seed, then a proportional cut. The three
// parts share the source's id maps and index space.
inline SplitDataset split_dataset(const InteractionDataset& ds, SplitRatios ratios, uint64_t seed) {
    if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0)
        throw std::invalid_argument("split_dataset: ratios must be positive");
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: ratios must sum to 1");

    std::vector<Interaction> shuffled = ds.interactions;
    RandomStream rng(seed);
    for (size_t i = shuffled.size(); i > 1; --i) {
        size_t j = rng.uniform_index(static_cast<uint32_t>(i));
        std::swap(shuffled[i - 1], shuffled[j]);
    }

    size_t n = shuffled.size();
    size_t n_train = static_cast<size_t>(std::llround(static_cast<double>(n) * ratios.train));
    size_t n_train_val = static_cast<size_t>(std::llround(static_cast<double>(n) * (ratios.train + ratios.val)));
    n_train = std::min(n_train, n);
    n_train_val = std::min(std::max(n_train_val, n_train), n);

    auto part = [&](size_t lo, size_t hi) {
        InteractionDataset out;
        out.interactions.assign(shuffled.begin() + lo, shuffled.begin() + hi);
        out.n_users = ds.n_users;
        out.n_items = ds.n_items;
        out.ids = ds.ids;
        return out;
    };
    SplitDataset split;
    split.train = part(0, n_train);
    split.val = part(n_train, n_train_val);
    split.test = part(n_train_val, n);
    split.split_seed = seed;
    return split;
}

// Binary interaction matrix in compressed sparse row layout; values are
// implicitly 1.
struct SparseInteractionMatrix {
    std::vector<uint64_t> row_offsets;  // size n_rows + 1
    std::vector<uint32_t> col_indices;  // strictly ascending within each row
    uint32_t n_rows = 0;
    uint32_t n_cols = 0;

    uint64_t nnz() const { return col_indices.size(); }
};

struct BipartiteGraph {
    std::vector<std::vector<uint32_t>> items_of_user;  // sorted ascending
    std::vector<uint32_t> row_degree;
    std::vector<uint32_t> col_degree;
    uint32_t n_users = 0;
    uint32_t n_items = 0;
};

inline std::pair<SparseInteractionMatrix, BipartiteGraph> build_matrix_and_graph(const InteractionDataset& train) {
    if (train.interactions.empty())
        throw std::invalid_argument("build_matrix_and_graph: empty train set");

    BipartiteGraph g;
    g.n_users = train.n_users;
    g.n_items = train.n_items;
    g.items_of_user.resize(train.n_users);
    g.row_degree.assign(train.n_users, 0);
    g.col_degree.assign(train.n_items, 0);
    for (const auto& it : train.interactions) {
        g.items_of_user[it.user].push_back(it.item);
        ++g.col_degree[it.item];
    }
    for (uint32_t u = 0; u < train.n_users; ++u) {
        auto& adj = g.items_of_user[u];
        std::sort(adj.begin(), adj.end());
        g.row_degree[u] = static_cast<uint32_t>(adj.size());
    }

    SparseInteractionMatrix a;
    a.n_rows = train.n_users;
    a.n_cols = train.n_items;
    a.row_offsets.resize(train.n_users + 1);
    a.col_indices.reserve(train.interactions.size());
    a.row_offsets[0] = 0;
    for (uint32_t u = 0; u < train.n_users; ++u) {
        const auto& adj = g.items_of_user[u];
        a.col_indices.insert(a.col_indices.end(), adj.begin(), adj.end());
        a.row_offsets[u + 1] = a.col_indices.size();
    }
    return {std::move(a), std::move(g)};
}

// Sorted per-user positive item sets, the common exclusion-set shape.
inline std::vector<std::vector<uint32_t>> user_item_sets(const InteractionDataset& ds) {
    std::vector<std::vector<uint32_t>> sets(ds.n_users);
    for (const auto& it : ds.interactions) sets[it.user].push_back(it.item);
    for (auto& s : sets) std::sort(s.begin(), s.end());
    return sets;
}

inline constexpr char kSplitCacheMagic[9] = "PSPNSPL1";

inline void save_split_cache(const SplitDataset& split, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_split_cache: cannot open " + path);
    io::write_magic(out, kSplitCacheMagic);
    io::write_u32(out, 1);  // version
    io::write_u32(out, split.train.n_users);
    io::write_u32(out, split.train.n_items);
    io::write_u64(out, split.split_seed);
    for (const InteractionDataset* part : {&split.train, &split.val, &split.test}) {
        io::write_u64(out, part->interactions.size());
        for (const auto& it : part->interactions) {
            io::write_u32(out, it.user);
            io::write_u32(out, it.item);
        }
    }
    if (!out) throw std::runtime_error("save_split_cache: write failed on " + path);
}

inline SplitDataset load_split_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_split_cache: cannot open " + path);
    io::expect_magic(in, kSplitCacheMagic, "load_split_cache");
    uint32_t version = io::read_u32(in);
    if (version != 1) throw std::runtime_error("load_split_cache: unsupported version");
    uint32_t n_users = io::read_u32(in);
    uint32_t n_items = io::read_u32(in);
    SplitDataset split;
    split.split_seed = io::read_u64(in);
    for (InteractionDataset* part : {&split.train, &split.val, &split.test}) {
        uint64_t count = io::read_u64(in);
        part->interactions.resize(count);
        for (uint64_t i = 0; i < count; ++i) {
            part->interactions[i].user = io::read_u32(in);
            part->interactions[i].item = io::read_u32(in);
        }
        part->n_users = n_users;
        part->n_items = n_items;
    }
    return split;
}

}  // namespace pspns
