#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qvision/matrix.hpp"

namespace qvision::qkernel {

/// Statevector memory cap: 2^24 amplitudes.
inline constexpr std::size_t kMaxQubits = 24;

/// n-qubit state, little-endian layout: qubit i is bit i of the basis
/// index. Amplitude norm is 1 for any prepared state.
struct StateVector {
    std::size_t n = 0;
    std::vector<std::complex<double>> amplitudes;
};

/// Data-encoding circuit: reps repetitions of (diagonal phase layer after a
/// Walsh-Hadamard layer). Phases are phi_i(x) = x_i on singles and
/// phi_ij(x) = (pi - x_i)(pi - x_j) on the listed pairs (default: every
/// unordered pair). Inputs are expected pre-scaled to [0, pi].
struct FeatureMapSpec {
    std::size_t n = 0;
    int reps = 2;
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // empty = all pairs

    static FeatureMapSpec full(std::size_t n, int reps = 2);
};

/// Normalized in-place Walsh-Hadamard transform (self-inverse).
void walsh_hadamard(std::vector<std::complex<double>>& amplitudes);

StateVector feature_map_state(std::span<const double> x, const FeatureMapSpec& spec);

/// K(x1, x2) = |<psi(x1)|psi(x2)>|^2, in [0, 1].
double kernel_entry(std::span<const double> x1, std::span<const double> x2,
                    const FeatureMapSpec& spec);

/// Symmetric Gram matrix over one sample set; states are prepared once per
/// row, the upper triangle is computed and mirrored.
Matrix kernel_matrix(const Matrix& x, const FeatureMapSpec& spec);

/// Rectangular cross-kernel (rows of a vs rows of b).
Matrix kernel_matrix(const Matrix& x_a, const Matrix& x_b, const FeatureMapSpec& spec);

/// Soft-margin SVM trained on a precomputed kernel.
struct SvmModel {
    std::vector<double> alpha;  // box-constrained duals, 0 <= alpha <= C
    std::vector<int> labels;    // training labels
    double bias = 0.0;
    std::vector<std::size_t> support_indices; // alpha > 0
    double C = 1.0;

    double dual_coef(std::size_t s) const { return alpha[s] * labels[s]; }
};

/// SMO-style pairwise coordinate ascent on the dual. Stops once no KKT
/// violation beyond tol survives max_passes consecutive sweeps. The
/// optional trace records the dual objective after every sweep.
SvmModel svm_train_precomputed(const Matrix& k, const std::vector<int>& y, double C = 1.0,
                               double tol = 1e-3, int max_passes = 50,
                               std::uint64_t seed = 0,
                               std::vector<double>* sweep_objectives = nullptr);

/// Decision values for a test x train kernel block.
std::vector<double> svm_decision_values(const SvmModel& model, const Matrix& k_test);

/// sign(decision), with sign(0) -> +1.
std::vector<int> svm_predict(const SvmModel& model, const Matrix& k_test);

/// Flat binary Gram format: two little-endian u64 (rows, cols) then
/// rows*cols little-endian doubles, row-major.
void save_gram(const std::string& path, const Matrix& gram);
Matrix load_gram(const std::string& path);

} // namespace qvision::qkernel
