#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qvision/matrix.hpp"
#include "qvision/trees.hpp"

namespace qvision::qboost {

/// Sequentially boosted weak learners plus everything the QUBO needs:
/// training outputs H (S x N of +-1) and per-stage errors/weights.
struct WeakEnsemble {
    std::vector<trees::DecisionTree> trees;
    std::vector<double> stage_weights; // w_i = 0.5 ln((1-eps)/eps)
    std::vector<double> stage_errors;  // eps_i, clamped away from {0, 1}
    Matrix outputs;                    // H: S x N, entries +-1
};

/// AdaBoost-style reweighting loop: uniform initial distribution, then
/// exponential updates D_{i+1}(s) = D_i(s) exp(-w_i y_s h_i(x_s)) / Z_i.
/// Stage errors are clamped to [1e-10, 1 - 1e-10] before the log.
WeakEnsemble train_weak_ensemble(const Matrix& x, const std::vector<int>& y,
                                 std::size_t n_trees, int depth, std::uint64_t seed = 0);

enum class QuboMode { Consistent, PaperExact };

std::string to_string(QuboMode mode);
QuboMode qubo_mode_from_string(const std::string& s);

/// Upper-triangular QUBO coefficients over N binary weights.
class QuboMatrix {
public:
    QuboMatrix() = default;
    QuboMatrix(std::size_t n, QuboMode mode, double lambda)
        : n_(n), mode_(mode), lambda_(lambda), coeff_(n * (n + 1) / 2, 0.0) {}

    std::size_t dimension() const { return n_; }
    QuboMode mode() const { return mode_; }
    double lambda() const { return lambda_; }

    double& at(std::size_t i, std::size_t j) { return coeff_[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return coeff_[index(i, j)]; }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i > j || j >= n_) throw ShapeError("QuboMatrix: need i <= j < N");
        return i * n_ - i * (i + 1) / 2 + j;
    }

    std::size_t n_ = 0;
    QuboMode mode_ = QuboMode::Consistent;
    double lambda_ = 0.0;
    std::vector<double> coeff_;
};

/// QUBO encoding of the regularized squared-loss selection problem.
/// Consistent mode is the exact expansion of the cost (up to the constant
/// S); paper-exact keeps the correlation terms unscaled.
QuboMatrix build_qubo(const Matrix& h, const std::vector<int>& y, double lambda,
                      QuboMode mode = QuboMode::Consistent);

double qubo_energy(const QuboMatrix& q, const std::vector<std::uint8_t>& w);

enum class SolverKind { Exhaustive, SimulatedAnnealing };

struct BinarySolution {
    std::vector<std::uint8_t> w;
    double energy = 0.0;
    SolverKind solver = SolverKind::Exhaustive;
    std::uint64_t seed = 0;
};

/// Global minimum by Gray-code enumeration with O(N) incremental updates.
/// Ties break toward fewer set bits, then the smaller integer encoding
/// (bit i weighted 2^i). Capped at N <= 25.
BinarySolution solve_exhaustive(const QuboMatrix& q);

inline constexpr std::size_t kExhaustiveCap = 25;

struct SaParams {
    int sweeps = 1000;
    int restarts = 20;
    std::optional<double> beta_initial; // auto-calibrated when absent
    std::optional<double> beta_final;   // caps the geometric schedule
    double cooling = 0.95;              // per-sweep temperature factor
};

/// Single-bit-flip Metropolis annealing under a geometric inverse-
/// temperature schedule; restart r uses seed + r, the best (lowest energy,
/// then lowest restart index) solution wins. Deterministic for a fixed
/// (Q, params, seed).
BinarySolution solve_sa(const QuboMatrix& q, const SaParams& params = {},
                        std::uint64_t seed = 0);

/// Pluggable solver seam so other samplers can stand in.
using QuboSampler = std::function<BinarySolution(const QuboMatrix&)>;

enum class ThresholdMode { Paper, Sweep };

std::string to_string(ThresholdMode mode);
ThresholdMode threshold_mode_from_string(const std::string& s);

/// Post-processing threshold for the strong classifier. Paper mode is the
/// sign of the mean ensemble score (labels unused); sweep mode scans score
/// midpoints for the training-error minimizer (ties -> smallest |T|).
/// Throws DegenerateModelError when no classifier is selected.
double compute_threshold(const std::vector<std::uint8_t>& w_opt, const Matrix& h_train,
                         const std::vector<int>& y_train, ThresholdMode mode);

/// Strong classifier: selected trees vote, threshold T is subtracted from
/// the vote before the sign.
struct QBoostModel {
    std::vector<trees::DecisionTree> selected_trees;
    std::vector<std::uint8_t> selection; // all N bits
    double threshold = 0.0;
    double lambda = 0.0;
    int depth = 0;

    std::size_t selected_count() const { return selected_trees.size(); }
};

int qboost_predict(const QBoostModel& model, std::span<const double> x);
std::vector<int> qboost_predict_batch(const QBoostModel& model, const Matrix& x);

/// Ensemble score sum_{i selected} H_{si} for precomputed tree outputs.
std::vector<double> selection_scores(const std::vector<std::uint8_t>& w, const Matrix& h);

struct QBoostConfig {
    std::size_t n_trees = 10;
    int depth = 3;
    double lambda = 0.0;
    QuboMode mode = QuboMode::Consistent;
    ThresholdMode threshold_mode = ThresholdMode::Sweep;
    std::uint64_t seed = 0;
};

/// Full pipeline: boost, encode, solve with the given sampler, threshold.
QBoostModel qboost_train(const Matrix& x, const std::vector<int>& y,
                         const QBoostConfig& config, const QuboSampler& sampler);

/// Assembles the model from an already-solved selection.
QBoostModel make_model(const WeakEnsemble& ensemble, const std::vector<std::uint8_t>& w,
                       double threshold, double lambda, int depth);

std::string qboost_to_json(const QBoostModel& model);
QBoostModel qboost_from_json(const std::string& text);

/// Text serialization: "N mode lambda" header line then one "i j value"
/// triple per nonzero upper-triangular coefficient.
void qubo_save(const std::string& path, const QuboMatrix& q);
QuboMatrix qubo_load(const std::string& path);

} // namespace qvision::qboost
