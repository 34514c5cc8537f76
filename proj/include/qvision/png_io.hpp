#pragma once

#include <string>

#include "qvision/image.hpp"

namespace qvision {

/// Reads an 8-bit grayscale, non-interlaced PNG. Anything else (color,
/// 16-bit, palette, Adam7) is rejected with IngestError naming the file.
RawImage read_png_gray8(const std::string& path);

/// Writes an image as an 8-bit grayscale PNG. Throws IoError on failure.
void write_png_gray8(const std::string& path, const RawImage& image);

} // namespace qvision
