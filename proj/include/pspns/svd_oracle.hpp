#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pspns/linalg.hpp"
#include "pspns/matrix.hpp"

namespace pspns {

// Full SVD of a small dense matrix by one-sided Jacobi rotations. This is the
// reference route for checking the randomized path and shares no code with
// it: no sketching, no QR, no Eigen.
inline TruncatedFactors exact_svd_oracle(const Matrix& dense) {
    if (dense.rows > 256 || dense.cols > 256)
        throw std::invalid_argument("exact_svd_oracle: dimensions exceed 256x256");
    if (dense.rows == 0 || dense.cols == 0)
        throw std::invalid_argument("exact_svd_oracle: empty matrix");

    // Work on W with rows >= cols; transpose swaps the factor roles.
    bool transposed = dense.rows < dense.cols;
    uint32_t m = transposed ? dense.cols : dense.rows;
    uint32_t n = transposed ? dense.rows : dense.cols;

    // column-major working copies
    std::vector<std::vector<double>> u(n, std::vector<double>(m));
    for (uint32_t i = 0; i < m; ++i)
        for (uint32_t j = 0; j < n; ++j) u[j][i] = transposed ? dense.at(j, i) : dense.at(i, j);
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (uint32_t j = 0; j < n; ++j) v[j][j] = 1.0;

    const double eps = 1e-15;
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (uint32_t i = 0; i + 1 < n; ++i) {
            for (uint32_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (uint32_t k = 0; k < m; ++k) {
                    alpha += u[i][k] * u[i][k];
                    beta += u[j][k] * u[j][k];
                    gamma += u[i][k] * u[j][k];
                }
                if (std::abs(gamma) <= eps * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (uint32_t k = 0; k < m; ++k) {
                    double ui = u[i][k], uj = u[j][k];
                    u[i][k] = c * ui - s * uj;
                    u[j][k] = s * ui + c * uj;
                }
                for (uint32_t k = 0; k < n; ++k) {
                    double vi = v[i][k], vj = v[j][k];
                    v[i][k] = c * vi - s * vj;
                    v[j][k] = s * vi + c * vj;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n);
    for (uint32_t j = 0; j < n; ++j) sigma[j] = std::sqrt(squared_norm(u[j]));
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](uint32_t a, uint32_t b) { return sigma[a] != sigma[b] ? sigma[a] > sigma[b] : a < b; });

    // left = normalized columns of u (m x n), right = v (n x n)
    Matrix left(m, n), right(n, n);
    std::vector<double> sigma_sorted(n);
    for (uint32_t jj = 0; jj < n; ++jj) {
        uint32_t src = order[jj];
        sigma_sorted[jj] = sigma[src];
        double inv = sigma[src] > 0.0 ? 1.0 / sigma[src] : 0.0;
        for (uint32_t k = 0; k < m; ++k) left.at(k, jj) = u[src][k] * inv;
        for (uint32_t k = 0; k < n; ++k) right.at(k, jj) = v[src][k];
    }

    TruncatedFactors f;
    f.rank = n;
    f.sigma = std::move(sigma_sorted);
    if (transposed) {
        f.user_factors = std::move(right);
        f.item_factors = std::move(left);
    } else {
        f.user_factors = std::move(left);
        f.item_factors = std::move(right);
    }
    return f;
}

inline TruncatedFactors truncate_factors(const TruncatedFactors& f, uint32_t rank) {
    TruncatedFactors out;
    out.rank = rank;
    out.sigma.assign(f.sigma.begin(), f.sigma.begin() + rank);
    out.user_factors = Matrix(f.user_factors.rows, rank);
    out.item_factors = Matrix(f.item_factors.rows, rank);
    for (uint32_t i = 0; i < f.user_factors.rows; ++i)
        for (uint32_t j = 0; j < rank; ++j) out.user_factors.at(i, j) = f.user_factors.at(i, j);
    for (uint32_t i = 0; i < f.item_factors.rows; ++i)
        for (uint32_t j = 0; j < rank; ++j) out.item_factors.at(i, j) = f.item_factors.at(i, j);
    return out;
}

}  // namespace pspns
