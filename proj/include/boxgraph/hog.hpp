#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "boxgraph/geometry.hpp"
#include "boxgraph/image.hpp"

namespace boxgraph {

inline constexpr int kPatchSize = 64;

/// 64x64 grayscale crop with intensities in [0, 1], row-major.
struct Patch {
    std::array<double, kPatchSize * kPatchSize> pixels{};

    double& operator()(int x, int y) { return pixels[static_cast<std::size_t>(y) * kPatchSize + x]; }
    double operator()(int x, int y) const { return pixels[static_cast<std::size_t>(y) * kPatchSize + x]; }
    bool valid() const;
};

struct HogConfig {
    int cell_size = 8;
    int block_cells = 2;
    int block_stride = 1;  // in cells
    int orientation_bins = 9;
    double clip = 0.2;
    double epsilon = 1e-6;

    int cells_per_side() const { return kPatchSize / cell_size; }
    int blocks_per_side() const { return (cells_per_side() - block_cells) / block_stride + 1; }
    std::size_t block_length() const {
        return static_cast<std::size_t>(block_cells * block_cells * orientation_bins);
    }
    std::size_t descriptor_length() const {
        const auto b = static_cast<std::size_t>(blocks_per_side());
        return b * b * block_length();
    }
};

/// Crops `box` (clipped to the image) and bilinearly resamples its luma to
/// 64x64 with half-pixel-center alignment. Throws std::invalid_argument when
/// the box does not intersect the image.
Patch crop_resize(const Image& image, const BoundingBox& box);

/// HOG descriptor: central-difference gradients, unsigned orientation votes
/// split linearly between the two nearest bins (centers at k*180/bins
/// degrees), per-cell histograms, overlapping blocks normalized with L2-Hys.
/// Blocks are concatenated row-major, cells within a block row-major.
std::vector<float> hog(const Patch& patch, const HogConfig& cfg = {});

/// crop_resize followed by hog for every box of one image.
std::vector<std::vector<float>> extract_features(const Image& image, const std::vector<BoundingBox>& boxes,
                                                 const HogConfig& cfg = {});

}  // namespace boxgraph
