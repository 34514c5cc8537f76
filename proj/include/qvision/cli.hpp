#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qvision/enhance.hpp"
#include "qvision/eval.hpp"
#include "qvision/ingest.hpp"
#include "qvision/qboost.hpp"

namespace qvision::cli {

struct DataConfig {
    enum class Source { Synthetic, Gdxray };
    Source source = Source::Synthetic;
    ingest::SyntheticConfig synthetic{250, 250, 32, 32, 0.8, 8.0, 0};
    std::string gdxray_root;
    std::optional<std::vector<std::string>> series;
    std::size_t resize_width = 0;  // 0 = native size
    std::size_t resize_height = 0;
};

struct ModelSpec {
    std::string name; // linsvm | rbfsvm | adaboost | qsvm | qboost-exhaustive | qboost-sa
    std::size_t n_trees = 10;
    int depth = 3;
    double lambda = 0.0;
    double C = 1.0;
    int reps = 2;
    qboost::QuboMode qubo_mode = qboost::QuboMode::Consistent;
    qboost::ThresholdMode threshold_mode = qboost::ThresholdMode::Sweep;

    /// Display label for report rows, e.g. "adaboost-50".
    std::string label() const;
};

struct RunConfig {
    DataConfig data;
    enhance::EnhanceConfig enhance;
    std::optional<std::size_t> pca_k;
    std::vector<ModelSpec> models;
    std::vector<double> lambda_grid;
    std::vector<int> depth_grid;
    std::string solver = "sa"; // sweep solver: sa | exhaustive
    double test_fraction = 0.2;
    bool rus = false;
    bool timing = false; // off by default so reports stay byte-reproducible
    int timing_repetitions = 5;
    std::uint64_t seed = 0;
    std::string out_path;
    eval::ReportFormat format = eval::ReportFormat::Csv;
};

/// Parses the run-config JSON schema
/// {data:{...}, enhance:{...}, pca:{k}, model:{...}, sweep:{lambda:[...]}, seed}.
RunConfig config_from_json_file(const std::string& path);
RunConfig config_from_json_text(const std::string& text);

/// Named presets reproducing the benchmark grids at desk scale:
/// table1 (PCA-10 model comparison), table5 (lambda sweep, 10 trees),
/// table7 (lambda sweep, 50 trees), table9 (depth-2 sweep with timing).
void apply_recipe(RunConfig& config, const std::string& recipe);

/// Validates cross-field constraints; throws ConfigError / CapacityError.
void validate(const RunConfig& config);

/// Features after enhance -> flatten -> split -> optional RUS ->
/// standardize -> optional PCA, all fitted on the training side only.
struct PreparedData {
    Matrix x_train;
    Matrix x_test;
    std::vector<int> y_train;
    std::vector<int> y_test;
};

Dataset load_data(const RunConfig& config);
PreparedData prepare(const RunConfig& config);

/// Subcommand bodies. Each returns what it printed/produced so the CLI
/// stays a thin shell and tests can call straight in.
std::string run_ingest(const RunConfig& config);
std::vector<eval::MetricRow> run_bench(const RunConfig& config);
std::vector<eval::MetricRow> run_sweep(const RunConfig& config);
void run_kernel(const RunConfig& config, std::size_t features, int reps,
                const std::string& out_path);
void run_train(const RunConfig& config, const ModelSpec& spec,
               const std::string& out_path);
void run_pca(const RunConfig& config, std::size_t k, const std::string& out_path);

} // namespace qvision::cli
