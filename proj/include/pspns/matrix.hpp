#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pspns {

// Dense row-major matrix of doubles.
struct Matrix {
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(uint32_t r, uint32_t c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    std::span<const double> row(uint32_t i) const {
        return std::span{data}.subspan(static_cast<size_t>(i) * cols, cols);
    }
    std::span<double> row_mut(uint32_t i) {
        return std::span{data}.subspan(static_cast<size_t>(i) * cols, cols);
    }
    double& at(uint32_t i, uint32_t j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(uint32_t i, uint32_t j) const { return data[static_cast<size_t>(i) * cols + j]; }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

inline void scaled_add(std::span<double> x, double a, std::span<const double> v) {
    for (size_t i = 0; i < x.size(); ++i) x[i] += a * v[i];
}

inline double squared_norm(std::span<const double> a) {
    double sum = 0.0;
    for (double v : a) sum += v * v;
    return sum;
}

}  // namespace pspns
