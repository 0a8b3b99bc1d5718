#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "boxgraph/dataset_io.hpp"
#include "boxgraph/image.hpp"

namespace boxgraph {

struct IntRange {
    int min = 0;
    int max = 0;
};

/// Scene generator settings. Surrogate textures: polyp = filled ellipse with a
/// radial gradient, bubbles = ringed circles, blur = smoothed background,
/// saturation = clipped-bright blob, contrast = flattened background,
/// misc = random blob, instrument = elongated bar, specularity = small bright spot.
struct SceneConfig {
    int image_size = 160;
    IntRange polyps_per_frame{1, 1};
    IntRange artifacts_per_frame{3, 3};
    std::map<std::string, double> artifact_class_mix;  // empty = uniform over all artifact labels
    IntRange polyp_size{28, 56};
    IntRange artifact_size{16, 40};
    double pixel_noise = 6.0;  // std-dev of additive noise, 8-bit units
    int frames_per_video = 20;
    int video_count = 10;
    int first_video = 0;  // video numbering offset, for disjoint splits
    std::string id_prefix = "syn";
    std::uint64_t rng_seed = 0;

    void validate() const;
    /// Mix with defaults filled in; labels in canonical artifact order.
    std::vector<std::pair<std::string, double>> resolved_mix() const;
};

struct ScoreRange {
    double min = 0.0;
    double max = 1.0;
};

/// Simulated detector error model.
struct DetectorNoiseConfig {
    double localization_jitter = 0.05;         // std-dev per box edge, fraction of box size
    std::map<std::string, double> miss_rate;   // per label; missing = default_miss_rate
    double default_miss_rate = 0.05;
    double spurious_rate = 0.3;                // Poisson mean of spurious boxes per frame
    std::map<std::string, std::map<std::string, double>> confusion;  // row label -> column label -> p; missing rows = identity
    ScoreRange matched_score{0.6, 1.0};
    ScoreRange spurious_score{0.05, 0.45};
    std::uint64_t rng_seed = 0;

    static DetectorNoiseConfig identity();
    void validate() const;
    double miss_for(const std::string& label) const;
};

struct SyntheticDataset {
    std::vector<FrameRecord> frames;  // image_path is relative: images/<frame_id>.png
    std::vector<Image> images;        // parallel to frames
    std::vector<FrameDetection> ground_truth;
};

/// Deterministic given cfg.rng_seed. Throws DataError when an object cannot be
/// placed after 100 attempts.
SyntheticDataset generate_dataset(const SceneConfig& cfg);

/// Writes frames.jsonl, gt.jsonl and images/*.png under `dir`.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

/// Per ground-truth box: dropped with its miss rate, otherwise jittered,
/// relabeled through the confusion matrix and scored from matched_score; plus
/// Poisson(spurious_rate) spurious boxes per frame with random labels.
std::vector<FrameDetection> simulate_detector(const std::vector<FrameRecord>& frames,
                                              const std::vector<FrameDetection>& ground_truth,
                                              const DetectorNoiseConfig& cfg);

}  // namespace boxgraph
