#include "qvision/png_io.hpp"

#include <zlib.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace qvision {
namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

[[noreturn]] void corrupt(const std::string& path, const std::string& what) {
    throw IngestError("corrupt PNG '" + path + "': " + what);
}

} // namespace

RawImage read_png_gray8(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open image file '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < kSignature.size() ||
        !std::equal(kSignature.begin(), kSignature.end(), bytes.begin()))
        corrupt(path, "bad signature");

    std::size_t pos = kSignature.size();
    bool have_header = false;
    std::uint32_t width = 0, height = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 8 <= bytes.size()) {
        std::uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + std::size_t(len) > bytes.size()) corrupt(path, "truncated chunk");
        const std::uint8_t* type = &bytes[pos + 4];
        const std::uint8_t* data = &bytes[pos + 8];
        std::uint32_t want_crc = read_be32(data + len);
        uLong got_crc = crc32(0L, type, 4);
        if (len > 0) got_crc = crc32(got_crc, data, len);
        if (want_crc != std::uint32_t(got_crc)) corrupt(path, "chunk CRC mismatch");

        std::string tag(reinterpret_cast<const char*>(type), 4);
        if (tag == "IHDR") {
            if (len != 13) corrupt(path, "bad IHDR length");
            width = read_be32(data);
            height = read_be32(data + 4);
            int bit_depth = data[8], color_type = data[9];
            int interlace = data[12];
            if (bit_depth != 8 || color_type != 0)
                throw IngestError("unsupported PNG '" + path +
                                  "': only 8-bit grayscale is handled");
            if (interlace != 0)
                throw IngestError("unsupported PNG '" + path + "': interlaced");
            if (width == 0 || height == 0) corrupt(path, "zero dimension");
            have_header = true;
        } else if (tag == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (tag == "IEND") {
            break;
        } else if ((type[0] & 0x20) == 0) {
            corrupt(path, "unknown critical chunk " + tag);
        }
        pos += 12 + len;
    }
    if (!have_header || idat.empty()) corrupt(path, "missing IHDR or IDAT");

    const std::size_t stride = std::size_t(width) + 1; // filter byte per scanline
    std::vector<std::uint8_t> raw(stride * height);
    uLongf out_len = uLongf(raw.size());
    int rc = uncompress(raw.data(), &out_len, idat.data(), uLong(idat.size()));
    if (rc != Z_OK || out_len != raw.size()) corrupt(path, "inflate failed");

    RawImage img(width, height);
    std::vector<std::uint8_t> prev(width, 0);
    for (std::uint32_t y = 0; y < height; ++y) {
        const std::uint8_t* line = &raw[y * stride];
        std::uint8_t filter = line[0];
        std::uint8_t* cur = &img.pixels[std::size_t(y) * width];
        for (std::uint32_t x = 0; x < width; ++x) {
            int rawv = line[1 + x];
            int a = x > 0 ? cur[x - 1] : 0;
            int b = prev[x];
            int c = x > 0 ? prev[x - 1] : 0;
            int v;
            switch (filter) {
                case 0: v = rawv; break;
                case 1: v = rawv + a; break;
                case 2: v = rawv + b; break;
                case 3: v = rawv + (a + b) / 2; break;
                case 4: v = rawv + paeth(a, b, c); break;
                default: corrupt(path, "bad filter type");
            }
            cur[x] = std::uint8_t(v & 0xff);
        }
        std::memcpy(prev.data(), cur, width);
    }
    return img;
}

void write_png_gray8(const std::string& path, const RawImage& image) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != image.width * image.height)
        throw IoError("write_png_gray8: degenerate image");

    // Scanlines with filter 0.
    const std::size_t stride = image.width + 1;
    std::vector<std::uint8_t> raw(stride * image.height);
    for (std::size_t y = 0; y < image.height; ++y) {
        raw[y * stride] = 0;
        std::memcpy(&raw[y * stride + 1], &image.pixels[y * image.width], image.width);
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw IoError("write_png_gray8: deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
    auto chunk = [&out](const char* tag, const std::vector<std::uint8_t>& data) {
        write_be32(out, std::uint32_t(data.size()));
        std::size_t start = out.size();
        out.insert(out.end(), tag, tag + 4);
        out.insert(out.end(), data.begin(), data.end());
        std::uint32_t crc = std::uint32_t(
            crc32(0L, out.data() + start, uInt(4 + data.size())));
        write_be32(out, crc);
    };

    std::vector<std::uint8_t> ihdr;
    write_be32(ihdr, std::uint32_t(image.width));
    write_be32(ihdr, std::uint32_t(image.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // grayscale
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter method
    ihdr.push_back(0); // no interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", compressed);
    chunk("IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

} // namespace qvision
