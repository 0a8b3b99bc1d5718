#include "boxgraph/hog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace boxgraph {

bool Patch::valid() const {
    return std::all_of(pixels.begin(), pixels.end(),
                       [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

Patch crop_resize(const Image& image, const BoundingBox& box) {
    BoundingBox region = box;
    if (!box.valid() || !clip_to_frame(region, image.width, image.height))
        throw std::invalid_argument("box does not intersect the image");

    const double sx = region.width / kPatchSize;
    const double sy = region.height / kPatchSize;
    const int max_x = image.width - 1;
    const int max_y = image.height - 1;
    Patch patch;
    for (int j = 0; j < kPatchSize; ++j) {
        // Pixel (i, j) of the patch has its center at (i + 0.5, j + 0.5); pixel
        // centers of the source are at integer + 0.5 as well.
        const double src_y = std::clamp(region.y_min + (j + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
        const int y0 = static_cast<int>(std::floor(src_y));
        const int y1 = std::min(y0 + 1, max_y);
        const double fy = src_y - y0;
        for (int i = 0; i < kPatchSize; ++i) {
            const double src_x =
                std::clamp(region.x_min + (i + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
            const int x0 = static_cast<int>(std::floor(src_x));
            const int x1 = std::min(x0 + 1, max_x);
            const double fx = src_x - x0;
            const double top = (1.0 - fx) * image.gray(x0, y0) + fx * image.gray(x1, y0);
            const double bottom = (1.0 - fx) * image.gray(x0, y1) + fx * image.gray(x1, y1);
            patch(i, j) = std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0);
        }
    }
    return patch;
}

namespace {

void normalize_l2(std::span<double> v, double eps) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double inv = 1.0 / std::sqrt(sq + eps * eps);
    for (double& x : v) x *= inv;
}

}  // namespace

std::vector<float> hog(const Patch& patch, const HogConfig& cfg) {
    const int n = kPatchSize;
    const int cells = cfg.cells_per_side();
    const int bins = cfg.orientation_bins;
    const double bin_width = 180.0 / bins;

    std::vector<double> hist(static_cast<std::size_t>(cells * cells * bins), 0.0);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double gx = patch(std::min(x + 1, n - 1), y) - patch(std::max(x - 1, 0), y);
            const double gy = patch(x, std::min(y + 1, n - 1)) - patch(x, std::max(y - 1, 0));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (angle < 0.0) angle += 180.0;
            if (angle >= 180.0) angle -= 180.0;
            const double pos = angle / bin_width;
            const int lo = static_cast<int>(std::floor(pos)) % bins;
            const int hi = (lo + 1) % bins;
            const double frac = pos - std::floor(pos);
            const std::size_t base = static_cast<std::size_t>(((y / cfg.cell_size) * cells + x / cfg.cell_size) * bins);
            hist[base + static_cast<std::size_t>(lo)] += mag * (1.0 - frac);
            hist[base + static_cast<std::size_t>(hi)] += mag * frac;
        }
    }

    const int blocks = cfg.blocks_per_side();
    const std::size_t block_len = cfg.block_length();
    std::vector<float> out;
    out.reserve(cfg.descriptor_length());
    std::vector<double> block(block_len);
    for (int by = 0; by < blocks; ++by) {
        for (int bx = 0; bx < blocks; ++bx) {
            std::size_t k = 0;
            for (int cy = 0; cy < cfg.block_cells; ++cy) {
                for (int cx = 0; cx < cfg.block_cells; ++cx) {
                    const int cell_y = by * cfg.block_stride + cy;
                    const int cell_x = bx * cfg.block_stride + cx;
                    const auto base = static_cast<std::size_t>((cell_y * cells + cell_x) * bins);
                    for (int b = 0; b < bins; ++b) block[k++] = hist[base + static_cast<std::size_t>(b)];
                }
            }
            normalize_l2(block, cfg.epsilon);
            for (double& v : block) v = std::min(v, cfg.clip);
            normalize_l2(block, cfg.epsilon);
            for (double v : block) out.push_back(static_cast<float>(v));
        }
    }
    return out;
}

std::vector<std::vector<float>> extract_features(const Image& image, const std::vector<BoundingBox>& boxes,
                                                 const HogConfig& cfg) {
    std::vector<std::vector<float>> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) out.push_back(hog(crop_resize(image, b), cfg));
    return out;
}

}  // namespace boxgraph
