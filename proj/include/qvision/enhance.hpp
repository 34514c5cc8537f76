#pragma once

#include <optional>

#include "qvision/image.hpp"

namespace qvision::enhance {

/// Percentile limits and output range for contrast stretching.
/// Defaults: 2nd / 98th percentiles mapped onto the full 8-bit range.
struct StretchLimits {
    double p_low = 2.0;   // in [0, 100)
    double p_high = 98.0; // in (p_low, 100]
    int a = 0;            // output low intensity
    int b = 255;          // output high intensity
};

/// Linear rescale of the [p_low, p_high] percentile band onto [a, b].
/// Percentiles are nearest-rank on the intensity histogram. Degenerate
/// images (p_low and p_high percentiles equal) come back constant at a.
RawImage contrast_stretch(const RawImage& image, const StretchLimits& limits = {});

/// Global histogram equalization: g = floor((L-1) * cdf(f)).
RawImage hist_equalize(const RawImage& image, int levels = 256);

/// Tiled (CLAHE-style) equalization. Each tile gets its own equalization
/// mapping, optionally clipped at clip_limit * tile_pixels with the excess
/// redistributed uniformly; pixels blend the mappings of the nearest tile
/// centers bilinearly. clip_limit = nullopt disables clipping, in which
/// case a (1,1) grid reproduces hist_equalize exactly.
RawImage adaptive_equalize(const RawImage& image, int tile_rows, int tile_cols,
                           std::optional<double> clip_limit = 0.01, int levels = 256);

enum class Enhancement { None, Stretch, HistEq, AdaptHist };

/// Settings for the pipeline-level enhancement step.
struct EnhanceConfig {
    Enhancement kind = Enhancement::None;
    StretchLimits stretch;
    int tile_rows = 8;
    int tile_cols = 8;
    std::optional<double> clip_limit = 0.01;
};

RawImage apply_enhancement(const RawImage& image, const EnhanceConfig& config);

} // namespace qvision::enhance
