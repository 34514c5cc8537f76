#pragma once

#include <cstdint>
#include <vector>

#include "qvision/common.hpp"

namespace qvision {

/// 8-bit grayscale image, row-major.
struct RawImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels; // length width * height

    RawImage() = default;
    RawImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(w * h, fill) {}

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }

    bool operator==(const RawImage&) const = default;
};

} // namespace qvision
