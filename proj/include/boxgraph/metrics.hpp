#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "boxgraph/dataset_io.hpp"
#include "boxgraph/geometry.hpp"

namespace boxgraph {

struct FrameCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    FrameCounts& operator+=(const FrameCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const FrameCounts&, const FrameCounts&) = default;
};

struct DetectionMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    bool precision_defined = false;  // tp + fp > 0
    bool recall_defined = false;     // tp + fn > 0
};

/// Center-in-box matching for one frame. A ground-truth box is a TP when at
/// least one prediction center falls inside it, otherwise a FN; a prediction
/// whose center lies in no ground-truth box is a FP. Further predictions on an
/// already detected box count as neither.
FrameCounts match_frame(std::span<const BoundingBox> predicted, std::span<const BoundingBox> ground_truth);

DetectionMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
DetectionMetrics aggregate_metrics(std::span<const FrameCounts> per_frame);

/// Scores the polyp rows of `predicted` against the polyp rows of
/// `ground_truth`, grouped by frame id. Other classes are ignored.
DetectionMetrics evaluate_polyps(std::span<const FrameDetection> predicted,
                                 std::span<const FrameDetection> ground_truth);

std::string metrics_json(const DetectionMetrics& m);
std::string metrics_table(const DetectionMetrics& m);
std::string metrics_csv(const DetectionMetrics& m);

}  // namespace boxgraph
