#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pspns/dataset.hpp"
#include "pspns/io.hpp"
#include "pspns/matrix.hpp"
#include "pspns/rng.hpp"

namespace pspns {

// Degree-normalized interaction matrix, same CSR layout as the binary matrix
// but with real entries 1/sqrt(rowD(u) * colD(p)).
struct NormalizedMatrix {
    std::vector<uint64_t> row_offsets;
    std::vector<uint32_t> col_indices;
    std::vector<double> values;
    uint32_t n_rows = 0;
    uint32_t n_cols = 0;

    uint64_t nnz() const { return col_indices.size(); }
};

inline NormalizedMatrix normalize_adjacency(const SparseInteractionMatrix& a, const BipartiteGraph& g) {
    NormalizedMatrix out;
    out.row_offsets = a.row_offsets;
    out.col_indices = a.col_indices;
    out.n_rows = a.n_rows;
    out.n_cols = a.n_cols;
    out.values.resize(a.col_indices.size());
    for (uint32_t u = 0; u < a.n_rows; ++u) {
        double ru = static_cast<double>(g.row_degree[u]);
        for (uint64_t k = a.row_offsets[u]; k < a.row_offsets[u + 1]; ++k) {
            double cp = static_cast<double>(g.col_degree[a.col_indices[k]]);
            out.values[k] = 1.0 / std::sqrt(ru * cp);
        }
    }
    return out;
}

// Rank-q truncated factors: user_factors * diag(sigma) * item_factors^T.
struct TruncatedFactors {
    Matrix user_factors;        // n_users x rank
    std::vector<double> sigma;  // descending, nonnegative
    Matrix item_factors;        // n_items x rank
    uint32_t rank = 0;
};

namespace detail {

// y = a * x, x dense (n_cols x l)
inline Eigen::MatrixXd csr_times_dense(const NormalizedMatrix& a, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(a.n_rows, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (uint32_t u = 0; u < a.n_rows; ++u) {
            double sum = 0.0;
            for (uint64_t k = a.row_offsets[u]; k < a.row_offsets[u + 1]; ++k)
                sum += a.values[k] * x(a.col_indices[k], j);
            y(u, j) = sum;
        }
    }
    return y;
}

// z = a^T * q, q dense (n_rows x l)
inline Eigen::MatrixXd csr_transpose_times_dense(const NormalizedMatrix& a, const Eigen::MatrixXd& q) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(a.n_cols, q.cols());
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        for (uint32_t u = 0; u < a.n_rows; ++u) {
            double c = q(u, j);
            for (uint64_t k = a.row_offsets[u]; k < a.row_offsets[u + 1]; ++k)
                z(a.col_indices[k], j) += a.values[k] * c;
        }
    }
    return z;
}

inline void thin_qr_inplace(Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd thin = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    qr.householderQ().applyThisOnTheLeft(thin);
    m = std::move(thin);
}

}  // namespace detail

// Truncated SVD from a Gaussian random-projection sketch: sketch = A * Omega
// with q+oversample columns, n_power power iterations with QR
// re-orthonormalization after each, then an exact SVD of the projected matrix
// mapped back to the original space. Deterministic for a fixed seed; the
// sketch columns draw from per-column streams so results do not depend on
// evaluation order.
inline TruncatedFactors randomized_svd(const NormalizedMatrix& a, uint32_t rank, uint32_t oversample,
                                       uint32_t n_power, uint64_t seed) {
    uint32_t min_dim = std::min(a.n_rows, a.n_cols);
    if (rank < 1 || rank > min_dim)
        throw std::invalid_argument("randomized_svd: rank must be in [1, min(n_rows, n_cols)]");
    uint32_t sketch_cols = std::min(rank + oversample, min_dim);

    Eigen::MatrixXd omega(a.n_cols, sketch_cols);
    for (uint32_t j = 0; j < sketch_cols; ++j) {
        RandomStream rs(derive_seed(seed, "sketch", j));
        for (uint32_t i = 0; i < a.n_cols; ++i) omega(i, j) = rs.normal();
    }

    Eigen::MatrixXd q = detail::csr_times_dense(a, omega);
    detail::thin_qr_inplace(q);
    for (uint32_t t = 0; t < n_power; ++t) {
        Eigen::MatrixXd z = detail::csr_transpose_times_dense(a, q);
        detail::thin_qr_inplace(z);
        q = detail::csr_times_dense(a, z);
        detail::thin_qr_inplace(q);
    }

    // b^T = A^T Q, so A ~= Q B = (Q Vb) S Ub^T
    Eigen::MatrixXd bt = detail::csr_transpose_times_dense(a, q);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd user_side = q * svd.matrixV();

    TruncatedFactors f;
    f.rank = rank;
    f.sigma.resize(rank);
    for (uint32_t j = 0; j < rank; ++j) f.sigma[j] = svd.singularValues()(j);
    f.user_factors = Matrix(a.n_rows, rank);
    for (uint32_t i = 0; i < a.n_rows; ++i)
        for (uint32_t j = 0; j < rank; ++j) f.user_factors.at(i, j) = user_side(i, j);
    f.item_factors = Matrix(a.n_cols, rank);
    const Eigen::MatrixXd& item_side = svd.matrixU();
    for (uint32_t i = 0; i < a.n_cols; ++i)
        for (uint32_t j = 0; j < rank; ++j) f.item_factors.at(i, j) = item_side(i, j);
    return f;
}

// Row u of user_factors * diag(sigma) * item_factors^T, in O(rank * n_items)
// without materializing the dense reconstruction.
inline void reconstruct_row_into(const TruncatedFactors& f, uint32_t u, std::span<double> out) {
    if (u >= f.user_factors.rows) throw std::out_of_range("reconstruct_row: user index out of range");
    std::vector<double> scaled(f.rank);
    auto urow = f.user_factors.row(u);
    for (uint32_t j = 0; j < f.rank; ++j) scaled[j] = urow[j] * f.sigma[j];
    for (uint32_t p = 0; p < f.item_factors.rows; ++p) out[p] = dot(scaled, f.item_factors.row(p));
}

inline std::vector<double> reconstruct_row(const TruncatedFactors& f, uint32_t u) {
    std::vector<double> out(f.item_factors.rows);
    reconstruct_row_into(f, u, out);
    return out;
}

inline constexpr char kFactorCacheMagic[9] = "PSPNSFC1";

inline void save_factors(const TruncatedFactors& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_factors: cannot open " + path);
    io::write_magic(out, kFactorCacheMagic);
    io::write_u32(out, 1);
    io::write_u32(out, f.user_factors.rows);
    io::write_u32(out, f.item_factors.rows);
    io::write_u32(out, f.rank);
    for (double v : f.sigma) io::write_f64(out, v);
    for (double v : f.user_factors.data) io::write_f64(out, v);
    for (double v : f.item_factors.data) io::write_f64(out, v);
    if (!out) throw std::runtime_error("save_factors: write failed on " + path);
}

inline TruncatedFactors load_factors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_factors: cannot open " + path);
    io::expect_magic(in, kFactorCacheMagic, "load_factors");
    if (io::read_u32(in) != 1) throw std::runtime_error("load_factors: unsupported version");
    uint32_t n_users = io::read_u32(in);
    uint32_t n_items = io::read_u32(in);
    TruncatedFactors f;
    f.rank = io::read_u32(in);
    f.sigma.resize(f.rank);
    for (auto& v : f.sigma) v = io::read_f64(in);
    f.user_factors = Matrix(n_users, f.rank);
    for (auto& v : f.user_factors.data) v = io::read_f64(in);
    f.item_factors = Matrix(n_items, f.rank);
    for (auto& v : f.item_factors.data) v = io::read_f64(in);
    return f;
}

}  // namespace pspns
