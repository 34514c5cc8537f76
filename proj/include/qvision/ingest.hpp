#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qvision/dataset.hpp"
#include "qvision/matrix.hpp"

namespace qvision::ingest {

// Flattened target the corpus images are resized to.
inline constexpr std::size_t kTargetWidth = 320;
inline constexpr std::size_t kTargetHeight = 428;

/// Loads a GDXray-style directory tree: <root>/<SERIES>/<SERIES>_<NNNN>.png
/// plus an optional <root>/<SERIES>/ground_truth.txt whose rows are
/// "image_index x1 x2 y1 y2" (1-based index). An image is labeled +1 iff
/// at least one annotation row references its index; a series without an
/// annotation file is entirely defect-free. Samples come back ordered by
/// (series_id, image_id).
Dataset load_gdxray(const std::string& root_path,
                    const std::optional<std::vector<std::string>>& series_filter = {});

/// Bilinear resize to target_width x target_height followed by row-major
/// flattening. Values stay real-valued in [0, 255].
std::vector<double> resize_flatten(const RawImage& image,
                                   std::size_t target_width = kTargetWidth,
                                   std::size_t target_height = kTargetHeight);

/// Flattens every image of a dataset into one feature matrix. target 0x0
/// keeps native dimensions (all images must then agree in size).
Matrix flatten_dataset(const Dataset& dataset, std::size_t target_width = 0,
                       std::size_t target_height = 0);

/// Per-feature mean/std fitted on training data. std below the epsilon
/// guard is replaced by 1 so constant features map to 0.
struct StandardizerModel {
    std::vector<double> mean;
    std::vector<double> std_dev;
    double epsilon = 1e-12;
};

StandardizerModel standardize_fit(const Matrix& train);
Matrix standardize_apply(const StandardizerModel& model, const Matrix& x);

/// Per-feature affine map of the observed [col_min, col_max] onto [lo, hi].
struct MinMaxModel {
    std::vector<double> col_min;
    std::vector<double> col_max;
    double lo = 0.0;
    double hi = 1.0;
};

MinMaxModel minmax_fit(const Matrix& x, double lo, double hi);
Matrix minmax_apply(const MinMaxModel& model, const Matrix& x);

/// One-shot fit+apply. Constant columns land on lo.
Matrix minmax_scale(const Matrix& x, double lo, double hi);

/// Synthetic defect-image generator, the desk-scale stand-in for the real
/// corpus. Negatives are smoothed-noise texture; positives add 1-3
/// elliptical bright deviations scaled by defect_contrast.
struct SyntheticConfig {
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    std::size_t image_width = 32;
    std::size_t image_height = 32;
    double defect_contrast = 0.8; // in [0, 1]
    double noise_std = 8.0;
    std::uint64_t seed = 0;
};

Dataset generate_synthetic(const SyntheticConfig& config);

/// JSON manifest round-trip, schema:
/// {"seed":..,"n_positive":..,"n_negative":..,"image_size":[h,w],
///  "defect_contrast":..,"noise_std":..}
SyntheticConfig load_synthetic_manifest(const std::string& path);
void save_synthetic_manifest(const std::string& path, const SyntheticConfig& config);

} // namespace qvision::ingest
