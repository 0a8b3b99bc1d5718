#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace boxgraph {

/// 8-bit interleaved image with 1 (gray) or 3 (RGB) channels, row-major.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    /// Luma in [0, 1] using 0.299/0.587/0.114 weights for RGB.
    double gray(int x, int y) const;

    friend bool operator==(const Image&, const Image&) = default;
};

/// Loads PNG or BMP (8-bit, 1 or 3 channels; PNG alpha is dropped). Throws DataError.
Image read_image(const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);
Image read_bmp(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& image);
void write_bmp(const std::filesystem::path& path, const Image& image);

}  // namespace boxgraph
