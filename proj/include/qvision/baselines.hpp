#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qvision/matrix.hpp"
#include "qvision/qkernel.hpp"
#include "qvision/trees.hpp"

namespace qvision::baselines {

struct LinearSvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    double C = 1.0;
};

/// Dual coordinate descent on the L1-loss linear soft-margin objective
/// with seeded per-epoch shuffling; stops once the largest dual change in
/// an epoch drops below tol.
LinearSvmModel linear_svm_fit(const Matrix& x, const std::vector<int>& y, double C = 1.0,
                              int max_epochs = 1000, double tol = 1e-4,
                              std::uint64_t seed = 0);

double linear_svm_decision(const LinearSvmModel& model, std::span<const double> x);
std::vector<int> linear_svm_predict(const LinearSvmModel& model, const Matrix& x);

/// "scale" resolves to 1 / (n_features * var(X)) with the population
/// variance over all entries of X.
using Gamma = std::variant<double, std::string>;

struct RbfSvmModel {
    Matrix support_vectors;
    std::vector<double> dual_coef; // alpha_s * y_s for support rows
    double bias = 0.0;
    double gamma = 0.0;
    double C = 1.0;
};

RbfSvmModel rbf_svm_fit(const Matrix& x, const std::vector<int>& y, double C = 1.0,
                        const Gamma& gamma = std::string("scale"), double tol = 1e-3,
                        std::uint64_t seed = 0);

double rbf_svm_decision(const RbfSvmModel& model, std::span<const double> x);
std::vector<int> rbf_svm_predict(const RbfSvmModel& model, const Matrix& x);

/// K_ij = exp(-gamma ||x_i - x_j||^2).
Matrix rbf_kernel_matrix(const Matrix& a, const Matrix& b, double gamma);

struct AdaBoostModel {
    std::vector<trees::DecisionTree> trees;
    std::vector<double> stage_weights;
};

/// Same boosting loop as the QBoost weak-ensemble trainer (one shared
/// implementation); the final vote is sign(sum_i w_i h_i(x)).
AdaBoostModel adaboost_fit(const Matrix& x, const std::vector<int>& y,
                           std::size_t n_estimators, int depth = 1,
                           std::uint64_t seed = 0);

int adaboost_predict(const AdaBoostModel& model, std::span<const double> x);
std::vector<int> adaboost_predict_batch(const AdaBoostModel& model, const Matrix& x);

std::string adaboost_to_json(const AdaBoostModel& model);
AdaBoostModel adaboost_from_json(const std::string& text);

std::string linear_svm_to_json(const LinearSvmModel& model);
LinearSvmModel linear_svm_from_json(const std::string& text);

std::string rbf_svm_to_json(const RbfSvmModel& model);
RbfSvmModel rbf_svm_from_json(const std::string& text);

} // namespace qvision::baselines
