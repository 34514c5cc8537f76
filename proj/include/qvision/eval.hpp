#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qvision/dataset.hpp"
#include "qvision/matrix.hpp"
#include "qvision/qboost.hpp"

namespace qvision::eval {

/// Counts of the four confusion cells; +1 (defect) is the positive class.
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
};

Confusion confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Metrics come back empty on a 0/0 denominator; reports render that as
/// a flagged 0.00*.
std::optional<double> precision(const Confusion& c);
std::optional<double> recall(const Confusion& c);
std::optional<double> f1(const Confusion& c);
std::optional<double> f1_from(std::optional<double> p, std::optional<double> r);

/// Random under-sampling to a 50-50 class balance: the majority class is
/// subsampled without replacement down to the minority count, then the
/// result is shuffled, all driven by the seed.
std::pair<Matrix, std::vector<int>> random_under_sample(const Matrix& x,
                                                        const std::vector<int>& y,
                                                        std::uint64_t seed);

/// Per-class proportional split. The test side gets ceil(S * fraction)
/// samples, allocated over classes by largest remainder.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

SplitIndices stratified_split_indices(const std::vector<int>& y, double test_fraction,
                                      std::uint64_t seed);

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset,
                                             double test_fraction = 0.2,
                                             std::uint64_t seed = 0);

/// One benchmark-report row.
struct MetricRow {
    std::string model;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<std::size_t> selected;
    std::optional<std::size_t> initial;
    std::optional<double> lambda;
    std::optional<int> depth;
    std::optional<double> train_seconds;
    std::optional<double> infer_ms;
};

MetricRow metric_row(const std::string& model, const std::vector<int>& y_true,
                     const std::vector<int>& y_pred);

/// Regularization sweep over a weak ensemble trained once: per lambda the
/// QUBO is rebuilt, re-solved, re-thresholded and re-evaluated on the
/// held-out outputs. h_test holds each tree's prediction on the test rows.
struct SweepSettings {
    std::vector<double> lambdas;
    qboost::QuboMode mode = qboost::QuboMode::Consistent;
    qboost::ThresholdMode threshold_mode = qboost::ThresholdMode::Sweep;
    std::string model_name = "qboost";
    std::optional<int> depth;
};

std::vector<MetricRow> sweep_regularization(const qboost::WeakEnsemble& ensemble,
                                            const std::vector<int>& y_train,
                                            const Matrix& h_test,
                                            const std::vector<int>& y_test,
                                            const SweepSettings& settings,
                                            const qboost::QuboSampler& sampler);

/// Tree outputs on a sample set, column i = tree i.
Matrix ensemble_outputs(const std::vector<trees::DecisionTree>& trees, const Matrix& x);

struct InferenceTiming {
    double total_seconds = 0.0;
    double per_image_ms = 0.0;
};

/// Median wall-clock of `repetitions` full passes of predict over x_test.
InferenceTiming time_inference(const std::function<void(const Matrix&)>& predict,
                               const Matrix& x_test, int repetitions);

enum class ReportFormat { Csv, Markdown };

std::string render_report(const std::vector<MetricRow>& rows, ReportFormat format);
void emit_report(const std::vector<MetricRow>& rows, ReportFormat format,
                 const std::string& out_path);

/// Parses a CSV produced by render_report back into rows (used by tests
/// and the report inspector).
std::vector<MetricRow> parse_csv_report(const std::string& text);

/// Rounding used everywhere metrics are printed: two decimals, half away
/// from zero.
double round2(double v);

} // namespace qvision::eval
