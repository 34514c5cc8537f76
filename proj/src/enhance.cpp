#include "qvision/enhance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace qvision::enhance {
namespace {

std::array<std::size_t, 256> histogram(const RawImage& img) {
    std::array<std::size_t, 256> h{};
    for (std::uint8_t p : img.pixels) ++h[p];
    return h;
}

/// Nearest-rank percentile: smallest intensity whose cumulative count
/// reaches ceil(p/100 * total), with p = 0 mapping to the minimum.
int percentile_intensity(const std::array<std::size_t, 256>& hist, std::size_t total,
                         double p) {
    std::size_t rank = std::size_t(std::ceil(p / 100.0 * double(total)));
    if (rank == 0) rank = 1;
    std::size_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        if (cum >= rank) return v;
    }
    return 255;
}

int round_half_up(double v) { return int(std::floor(v + 0.5)); }

/// Equalization mapping of one histogram: T(k) = floor((L-1) * cdf(k)),
/// with optional CLAHE clipping. Bins at or above `levels` must be empty.
std::vector<int> equalize_mapping(const std::array<std::size_t, 256>& hist,
                                  std::size_t total, int levels,
                                  std::optional<double> clip_limit) {
    std::vector<double> counts(static_cast<std::size_t>(levels), 0.0);
    for (int v = 0; v < levels; ++v) counts[std::size_t(v)] = double(hist[v]);

    if (clip_limit) {
        double clip = *clip_limit * double(total);
        double excess = 0.0;
        for (double& c : counts) {
            if (c > clip) {
                excess += c - clip;
                c = clip;
            }
        }
        double share = excess / double(levels);
        for (double& c : counts) c += share;
    }

    std::vector<int> mapping(static_cast<std::size_t>(levels), 0);
    double cum = 0.0;
    for (int v = 0; v < levels; ++v) {
        cum += counts[std::size_t(v)];
        double t = std::floor(double(levels - 1) * (cum / double(total)));
        mapping[std::size_t(v)] = std::clamp(int(t), 0, levels - 1);
    }
    return mapping;
}

} // namespace

RawImage contrast_stretch(const RawImage& image, const StretchLimits& limits) {
    if (!(limits.p_low >= 0.0 && limits.p_low < limits.p_high && limits.p_high <= 100.0))
        throw EnhanceError("contrast_stretch: need 0 <= p_low < p_high <= 100");
    if (!(limits.a < limits.b))
        throw EnhanceError("contrast_stretch: need a < b");

    auto hist = histogram(image);
    std::size_t total = image.pixels.size();
    int c = percentile_intensity(hist, total, limits.p_low);
    int d = percentile_intensity(hist, total, limits.p_high);

    RawImage out(image.width, image.height);
    if (d == c) {
        std::fill(out.pixels.begin(), out.pixels.end(), std::uint8_t(limits.a));
        return out;
    }
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
        // Integer numerator first so exact halves stay exact.
        double mapped = double((v - c) * (limits.b - limits.a)) / double(d - c) + limits.a;
        mapped = std::clamp(mapped, double(limits.a), double(limits.b));
        lut[v] = std::uint8_t(round_half_up(mapped));
    }
    for (std::size_t i = 0; i < total; ++i) out.pixels[i] = lut[image.pixels[i]];
    return out;
}

RawImage hist_equalize(const RawImage& image, int levels) {
    if (levels < 2 || levels > 256) throw EnhanceError("hist_equalize: levels out of range");
    for (std::uint8_t p : image.pixels)
        if (int(p) >= levels)
            throw EnhanceError("hist_equalize: intensity >= L");

    auto mapping = equalize_mapping(histogram(image), image.pixels.size(), levels,
                                    std::nullopt);
    RawImage out(image.width, image.height);
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
        out.pixels[i] = std::uint8_t(mapping[image.pixels[i]]);
    return out;
}

RawImage adaptive_equalize(const RawImage& image, int tile_rows, int tile_cols,
                           std::optional<double> clip_limit, int levels) {
    if (tile_rows < 1 || tile_cols < 1)
        throw EnhanceError("adaptive_equalize: tile grid must be at least 1x1");
    if (levels < 2 || levels > 256)
        throw EnhanceError("adaptive_equalize: levels out of range");
    if (image.height / std::size_t(tile_rows) < 2 || image.width / std::size_t(tile_cols) < 2)
        throw EnhanceError("adaptive_equalize: tiles smaller than 2x2 pixels");
    for (std::uint8_t p : image.pixels)
        if (int(p) >= levels)
            throw EnhanceError("adaptive_equalize: intensity >= L");

    const std::size_t H = image.height, W = image.width;
    const int R = tile_rows, C = tile_cols;

    // Tile boundaries by even integer division; per-tile mapping + center.
    auto row_start = [&](int r) { return std::size_t(r) * H / std::size_t(R); };
    auto col_start = [&](int c) { return std::size_t(c) * W / std::size_t(C); };

    std::vector<std::vector<int>> mapping(static_cast<std::size_t>(R) * static_cast<std::size_t>(C));
    std::vector<double> center_y(static_cast<std::size_t>(R), 0.0);
    std::vector<double> center_x(static_cast<std::size_t>(C), 0.0);
    for (int r = 0; r < R; ++r) {
        std::size_t y0 = row_start(r), y1 = row_start(r + 1);
        center_y[std::size_t(r)] = (double(y0) + double(y1) - 1.0) / 2.0;
        for (int c = 0; c < C; ++c) {
            std::size_t x0 = col_start(c), x1 = col_start(c + 1);
            if (r == 0) center_x[std::size_t(c)] = (double(x0) + double(x1) - 1.0) / 2.0;
            std::array<std::size_t, 256> h{};
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) ++h[image.at(y, x)];
            std::size_t n = (y1 - y0) * (x1 - x0);
            mapping[std::size_t(r) * C + c] = equalize_mapping(h, n, levels, clip_limit);
        }
    }

    // Neighbor pair along one axis plus interpolation weight toward the
    // second tile. Edge half-tiles clamp to the single available center.
    auto bracket = [](double coord, const std::vector<double>& centers) {
        int n = int(centers.size());
        if (n == 1 || coord <= centers.front()) return std::tuple<int, int, double>{0, 0, 0.0};
        if (coord >= centers.back()) return std::tuple<int, int, double>{n - 1, n - 1, 0.0};
        int hi = 1;
        while (centers[std::size_t(hi)] < coord) ++hi;
        int lo = hi - 1;
        double w = (coord - centers[std::size_t(lo)]) /
                   (centers[std::size_t(hi)] - centers[std::size_t(lo)]);
        return std::tuple<int, int, double>{lo, hi, w};
    };

    RawImage out(W, H);
    for (std::size_t y = 0; y < H; ++y) {
        auto [r0, r1, wy] = bracket(double(y), center_y);
        for (std::size_t x = 0; x < W; ++x) {
            auto [c0, c1, wx] = bracket(double(x), center_x);
            int k = image.at(y, x);
            double m00 = mapping[std::size_t(r0) * C + c0][std::size_t(k)];
            double m01 = mapping[std::size_t(r0) * C + c1][std::size_t(k)];
            double m10 = mapping[std::size_t(r1) * C + c0][std::size_t(k)];
            double m11 = mapping[std::size_t(r1) * C + c1][std::size_t(k)];
            double top = m00 + wx * (m01 - m00);
            double bot = m10 + wx * (m11 - m10);
            double v = top + wy * (bot - top);
            out.at(y, x) = std::uint8_t(std::clamp(round_half_up(v), 0, levels - 1));
        }
    }
    return out;
}

RawImage apply_enhancement(const RawImage& image, const EnhanceConfig& config) {
    switch (config.kind) {
        case Enhancement::None: return image;
        case Enhancement::Stretch: return contrast_stretch(image, config.stretch);
        case Enhancement::HistEq: return hist_equalize(image);
        case Enhancement::AdaptHist:
            return adaptive_equalize(image, config.tile_rows, config.tile_cols,
                                     config.clip_limit);
    }
    throw ConfigError("apply_enhancement: unknown enhancement kind");
}

} // namespace qvision::enhance
