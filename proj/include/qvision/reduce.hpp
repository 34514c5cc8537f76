#pragma once

#include <string>
#include <vector>

#include "qvision/matrix.hpp"

namespace qvision::reduce {

/// Fitted PCA basis. components rows are orthonormal principal directions,
/// eigenvalues are the matching population variances, sorted descending.
struct PcaModel {
    std::vector<double> mean;
    Matrix components; // k x n_features
    std::vector<double> eigenvalues;

    std::size_t k() const { return components.rows(); }
    std::size_t n_features() const { return components.cols(); }
};

/// Top-k principal components of the population covariance of X. When the
/// sample count is below the feature count the S x S Gram matrix of
/// centered rows is decomposed instead and back-projected (snapshot
/// method). Component signs are fixed so the largest-magnitude coordinate
/// is positive.
PcaModel pca_fit(const Matrix& x, std::size_t k);

/// (X - mean) * components^T -> S x k scores.
Matrix pca_transform(const PcaModel& model, const Matrix& x);

/// Reconstruction from scores back to the original space.
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores);

void pca_save_json(const std::string& path, const PcaModel& model);
PcaModel pca_load_json(const std::string& path);

} // namespace qvision::reduce
