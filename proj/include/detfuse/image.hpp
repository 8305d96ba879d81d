#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace detfuse {

/// 8-bit image, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          pixels(static_cast<size_t>(w) * static_cast<size_t>(h) * static_cast<size_t>(c), fill) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3)) {
            throw std::invalid_argument("Image: bad dimensions");
        }
    }

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + static_cast<size_t>(c)];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + static_cast<size_t>(c)];
    }

    bool operator==(const Image&) const = default;
};

/// Binary PPM (P6, 3-channel) / PGM (P5, 1-channel), maxval 255.
Image read_pnm(const std::string& path);
void write_pnm(const Image& img, const std::string& path);

}  // namespace detfuse
