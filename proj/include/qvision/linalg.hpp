#pragma once

#include <vector>

#include "qvision/matrix.hpp"

namespace qvision::linalg {

/// Eigendecomposition of a real symmetric matrix. eigenvalues are sorted
/// descending; row k of eigenvectors is the unit eigenvector of
/// eigenvalues[k].
struct SymmetricEigen {
    std::vector<double> eigenvalues;
    Matrix eigenvectors; // n x n, rows are eigenvectors
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below tol relative to the matrix norm. Deterministic sweep order.
/// Throws NumericalError if max_sweeps is exhausted without converging,
/// ShapeError if the input is not square.
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-10, int max_sweeps = 100);

double dot(std::span<const double> a, std::span<const double> b);

double squared_distance(std::span<const double> a, std::span<const double> b);

} // namespace qvision::linalg
