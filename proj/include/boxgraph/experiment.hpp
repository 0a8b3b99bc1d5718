#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "boxgraph/metrics.hpp"
#include "boxgraph/pipeline.hpp"

namespace boxgraph {

/// One row of an experiment grid. A baseline row scores the thresholded
/// detector polyps directly.
struct ExperimentConfiguration {
    std::string model;
    bool baseline = false;
    std::string vocabulary = "art1";
    CriteriaSet criteria;
    Scope scope = Scope::dataset_level;
    ClassMode class_mode = ClassMode::multiclass;
    std::uint64_t seed = 0;
};

struct Manifest {
    std::filesystem::path base_dir;  // relative paths below resolve against this
    std::filesystem::path train_frames;
    std::filesystem::path train_gt;
    std::filesystem::path train_artifacts;
    std::filesystem::path test_frames;
    std::filesystem::path test_gt;
    std::filesystem::path test_polyps;
    std::filesystem::path test_artifacts;
    PipelineOptions options;
    TrainConfig train;      // class_mode and rng_seed are taken per configuration
    double iou_threshold = 0.5;
    double random_p = 0.5;
    std::vector<ExperimentConfiguration> configurations;  // "seeds" lists are expanded, one row per seed
};

/// Parses the manifest JSON document (schema in docs/manifest.md). Throws DataError.
Manifest read_manifest(const std::filesystem::path& path);

struct ReportRow {
    ExperimentConfiguration config;
    std::optional<DetectionMetrics> metrics;
    std::string error;  // set when this row failed
};

struct ExperimentData {
    TrainInputs train;
    InferInputs test;
    std::vector<FrameDetection> test_ground_truth;
    ImageProvider train_images;
    ImageProvider test_images;
};

ExperimentData load_experiment_data(const Manifest& manifest);

/// Trains, infers and scores every configuration. A failing row records its
/// error and the run continues.
std::vector<ReportRow> run_experiment(const Manifest& manifest, const ExperimentData& data);
std::vector<ReportRow> run_experiment(const std::filesystem::path& manifest_file);

/// Table columns: model, art. class, cc, ifc, TP, FP, FN, Precision, Recall, F1, F2.
std::string report_table(const std::vector<ReportRow>& rows);
std::string report_csv(const std::vector<ReportRow>& rows);
/// Rows with their full configuration plus the manifest's shared settings.
std::string report_json(const Manifest& manifest, const std::vector<ReportRow>& rows);

}  // namespace boxgraph
