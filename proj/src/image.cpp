#include "boxgraph/image.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <png.h>

#include "boxgraph/error.hpp"

namespace boxgraph {

Image::Image(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw std::invalid_argument("image must have positive size and 1 or 3 channels");
}

double Image::gray(int x, int y) const {
    if (channels == 1) return at(x, y, 0) / 255.0;
    return (0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2)) / 255.0;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw DataError("cannot open image " + path.string());
    return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw DataError(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Image read_png(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    try {
        png_init_io(png, file.get());
        png_read_info(png, info);
        const auto color = png_get_color_type(png, info);
        const auto depth = png_get_bit_depth(png, info);
        if (depth == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
        png_read_update_info(png, info);

        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const int channels = png_get_channels(png, info);
        if (channels != 1 && channels != 3)
            throw DataError("unsupported PNG channel count in " + path.string());
        Image img(width, height, channels);
        std::vector<png_bytep> rows(static_cast<std::size_t>(height));
        for (int y = 0; y < height; ++y)
            rows[static_cast<std::size_t>(y)] = img.pixels.data() + static_cast<std::size_t>(y) * width * channels;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        return img;
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const Image& image) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        auto* row = const_cast<png_bytep>(image.pixels.data() +
                                          static_cast<std::size_t>(y) * image.width * image.channels);
        png_write_row(png, row);
    }
    png_write_end(png, nullptr);
}

namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

// Uncompressed 8-bit paletted (gray) or 24-bit BMP only.
Image read_bmp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path.string());
    const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 54 || buf[0] != 'B' || buf[1] != 'M') throw DataError(path.string() + ": not a BMP file");
    const std::uint32_t offset = read_u32(&buf[10]);
    const std::uint32_t header_size = read_u32(&buf[14]);
    const auto width = static_cast<std::int32_t>(read_u32(&buf[18]));
    const auto raw_height = static_cast<std::int32_t>(read_u32(&buf[22]));
    const std::uint16_t bpp = read_u16(&buf[28]);
    const std::uint32_t compression = read_u32(&buf[30]);
    if (compression != 0 || (bpp != 8 && bpp != 24) || width <= 0 || raw_height == 0)
        throw DataError(path.string() + ": unsupported BMP variant");
    const bool bottom_up = raw_height > 0;
    const int height = bottom_up ? raw_height : -raw_height;
    const int channels = bpp == 8 ? 1 : 3;
    const std::size_t stride = (static_cast<std::size_t>(width) * (bpp / 8) + 3) & ~std::size_t{3};
    if (offset + stride * static_cast<std::size_t>(height) > buf.size())
        throw DataError(path.string() + ": truncated BMP");
    // Palette of an 8-bit BMP maps index to gray via the blue/green/red entries.
    std::array<std::uint8_t, 256> palette{};
    for (int i = 0; i < 256; ++i) palette[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    if (bpp == 8) {
        const std::size_t pal_start = 14 + header_size;
        for (std::size_t i = 0; i < 256 && pal_start + 4 * i + 2 < offset; ++i)
            palette[i] = buf[pal_start + 4 * i + 1];
    }
    Image img(width, height, channels);
    for (int y = 0; y < height; ++y) {
        const int src_row = bottom_up ? height - 1 - y : y;
        const std::uint8_t* row = &buf[offset + stride * static_cast<std::size_t>(src_row)];
        for (int x = 0; x < width; ++x) {
            if (channels == 1) {
                img.at(x, y, 0) = palette[row[x]];
            } else {
                img.at(x, y, 0) = row[3 * x + 2];
                img.at(x, y, 1) = row[3 * x + 1];
                img.at(x, y, 2) = row[3 * x + 0];
            }
        }
    }
    return img;
}

void write_bmp(const std::filesystem::path& path, const Image& image) {
    const int bpp = image.channels == 1 ? 8 : 24;
    const std::size_t stride = (static_cast<std::size_t>(image.width) * (bpp / 8) + 3) & ~std::size_t{3};
    const std::uint32_t palette_bytes = bpp == 8 ? 1024 : 0;
    const std::uint32_t offset = 54 + palette_bytes;
    const auto data_bytes = static_cast<std::uint32_t>(stride * static_cast<std::size_t>(image.height));
    std::vector<std::uint8_t> out;
    out.push_back('B');
    out.push_back('M');
    put_u32(out, offset + data_bytes);
    put_u32(out, 0);
    put_u32(out, offset);
    put_u32(out, 40);
    put_u32(out, static_cast<std::uint32_t>(image.width));
    put_u32(out, static_cast<std::uint32_t>(image.height));
    put_u16(out, 1);
    put_u16(out, static_cast<std::uint16_t>(bpp));
    put_u32(out, 0);
    put_u32(out, data_bytes);
    put_u32(out, 2835);
    put_u32(out, 2835);
    put_u32(out, bpp == 8 ? 256 : 0);
    put_u32(out, 0);
    if (bpp == 8) {
        for (int i = 0; i < 256; ++i) {
            const auto v = static_cast<std::uint8_t>(i);
            out.insert(out.end(), {v, v, v, 0});
        }
    }
    for (int y = image.height - 1; y >= 0; --y) {
        const std::size_t start = out.size();
        for (int x = 0; x < image.width; ++x) {
            if (image.channels == 1) {
                out.push_back(image.at(x, y, 0));
            } else {
                out.push_back(image.at(x, y, 2));
                out.push_back(image.at(x, y, 1));
                out.push_back(image.at(x, y, 0));
            }
        }
        out.resize(start + stride, 0);
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Image read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (magic[0] == 'B' && magic[1] == 'M') return read_bmp(path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return read_png(path);
    throw DataError(path.string() + ": unsupported image format (expected PNG or BMP)");
}

}  // namespace boxgraph
