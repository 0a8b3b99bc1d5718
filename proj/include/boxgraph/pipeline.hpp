#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "boxgraph/dataset_io.hpp"
#include "boxgraph/graph.hpp"
#include "boxgraph/hog.hpp"
#include "boxgraph/image.hpp"
#include "boxgraph/sage.hpp"

namespace boxgraph {

/// Supplies the pixels of a frame.
using ImageProvider = std::function<Image(const FrameRecord&)>;

/// Reads FrameRecord::image_path, resolving relative paths against `base_dir`.
ImageProvider disk_images(std::filesystem::path base_dir);

struct Thresholds {
    double polyp = kPolypScoreThreshold;
    double artifact = kArtifactScoreThreshold;
};

struct PipelineOptions {
    Thresholds thresholds;
    /// Train on ground-truth artifact boxes instead of artifact detections.
    bool gt_artifacts = false;
    std::size_t threads = 1;
    HogConfig hog;
};

/// HOG descriptor for every detection of `dataset`, in node order. Frames are
/// processed on up to `threads` workers; results do not depend on the count.
std::vector<std::vector<float>> compute_features(const Dataset& dataset, const ImageProvider& images,
                                                 const HogConfig& hog, std::size_t threads = 1);

/// Detections + features -> nodes -> graph, in one step.
BoxGraph graph_from_dataset(const Dataset& dataset, const ClassVocabulary& vocabulary, const GraphConfig& cfg,
                            const ImageProvider& images, const PipelineOptions& options);

struct TrainInputs {
    std::vector<FrameRecord> frames;
    std::vector<FrameDetection> ground_truth;         // polyp rows are used (and artifacts with gt_artifacts)
    std::vector<FrameDetection> artifact_detections;  // non-polyp rows are used
};

/// The training node set: ground-truth polyps plus thresholded artifact
/// detections, restricted to the vocabulary.
Dataset training_dataset(const TrainInputs& inputs, const ClassVocabulary& vocabulary,
                         const PipelineOptions& options);

TrainResult train_pipeline(const TrainInputs& inputs, const ClassVocabulary& vocabulary,
                           const GraphConfig& graph_cfg, const TrainConfig& train_cfg, const ImageProvider& images,
                           const PipelineOptions& options = {});

struct InferInputs {
    std::vector<FrameRecord> frames;
    std::vector<FrameDetection> polyp_detections;     // polyp rows are used
    std::vector<FrameDetection> artifact_detections;  // non-polyp rows are used
};

struct RelabeledDetection {
    std::string frame_id;
    Detection detection;  // as produced by the detector
    std::string graph_class;
    double graph_prob = 0.0;  // classifier probability of graph_class
    double polyp_prob = 0.0;
};

struct InferenceResult {
    std::vector<RelabeledDetection> relabeled;
    std::vector<FrameDetection> polyp_set;  // boxes whose graph class is 'polyp'
    std::vector<std::string> warnings;
};

/// The thresholded detector polyp set; the no-graph baseline.
std::vector<FrameDetection> baseline_polyps(const InferInputs& inputs, const Thresholds& thresholds);

/// Thresholds the detections, builds the unseen graph from detector classes,
/// and re-classifies every box. `graph_cfg` defaults to the model's training
/// graph configuration; its criteria must match the model's.
InferenceResult infer_pipeline(const SageModel& model, const InferInputs& inputs, const ImageProvider& images,
                               const std::optional<GraphConfig>& graph_cfg = std::nullopt,
                               const PipelineOptions& options = {});

/// Relabeled detections: the detections format plus detector_class,
/// graph_class, graph_prob and polyp_prob.
void write_relabeled(const std::filesystem::path& path, const std::vector<RelabeledDetection>& rows);
std::vector<RelabeledDetection> read_relabeled(const std::filesystem::path& path);

}  // namespace boxgraph
