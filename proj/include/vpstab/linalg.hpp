#pragma once

#include <vector>

#include "vpstab/common.hpp"

namespace vpstab {

/// Dense row-major matrix just large enough for the solver internals.
struct Matrix {
    std::size_t n = 0, m = 0;
    std::vector<double> a;
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : n(rows), m(cols), a(rows * cols, fill) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * m + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * m + j]; }
};

/// Solves A x = b by LU with partial pivoting; A is overwritten.
std::vector<double> luSolve(Matrix A, std::vector<double> b);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending; vectors (columns) optional.
std::vector<double> symmetricEigenvalues(Matrix A, Matrix* vectors = nullptr);

} // namespace vpstab
