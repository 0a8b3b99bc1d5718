#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boxgraph/geometry.hpp"

namespace boxgraph {

inline constexpr std::string_view kPolypLabel = "polyp";

/// The seven endoscopic artifact labels, in canonical order.
const std::vector<std::string>& artifact_labels();
bool is_artifact_label(std::string_view label);
/// 'polyp' or one of the artifact labels.
bool is_known_label(std::string_view label);

enum class Source { ground_truth, detector };

std::string_view to_string(Source s);
Source parse_source(std::string_view s);

struct Detection {
    BoundingBox bbox;
    std::string class_label;
    double score = 1.0;
    Source source = Source::ground_truth;

    bool is_polyp() const { return class_label == kPolypLabel; }
    friend bool operator==(const Detection&, const Detection&) = default;
};

/// One row of a detections file: a detection plus the frame it belongs to.
struct FrameDetection {
    std::string frame_id;
    Detection detection;
    std::size_t line = 0;  // 1-based source line, 0 when not read from a file
};

struct FrameRecord {
    std::string frame_id;
    std::string video_id;
    std::string image_path;
    int width = 0;
    int height = 0;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Ordered label set with 'polyp' always at index 0.
class ClassVocabulary {
public:
    static constexpr std::size_t polyp_index = 0;

    /// Throws std::invalid_argument on duplicates, unknown labels or a missing 'polyp'.
    /// 'polyp' is moved to the front; the relative order of artifacts is kept.
    explicit ClassVocabulary(std::vector<std::string> labels, std::string name = "custom");

    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return labels_.size(); }
    std::optional<std::size_t> index_of(std::string_view label) const;
    bool contains(std::string_view label) const { return index_of(label).has_value(); }
    const std::string& label(std::size_t index) const { return labels_.at(index); }
    static bool is_artifact_index(std::size_t index) { return index != polyp_index; }

    /// Known artifact labels that are not part of this vocabulary.
    std::set<std::string> excluded_artifacts() const;

    friend bool operator==(const ClassVocabulary&, const ClassVocabulary&) = default;

private:
    std::vector<std::string> labels_;
    std::string name_;
};

enum class ArtifactSet { art1, art2, art3 };

ClassVocabulary select_artifact_set(ArtifactSet set);
/// art1 | art2 | art3 | all (every known label, specularity included).
ClassVocabulary vocabulary_by_name(std::string_view name);

struct Dataset {
    std::vector<FrameRecord> frames;
    std::vector<std::vector<Detection>> detections;  // parallel to frames
    std::vector<std::string> warnings;

    /// Index of the frame with this id, or nullopt.
    std::optional<std::size_t> find_frame(std::string_view frame_id) const;
    std::size_t detection_count() const;
    /// Flattened (frame_id, detection) rows in frame order then detection order.
    std::vector<FrameDetection> rows() const;

    bool same_content(const Dataset& other) const {
        return frames == other.frames && detections == other.detections;
    }
};

std::vector<FrameRecord> read_frames(const std::filesystem::path& path);
std::vector<FrameDetection> read_detections(const std::filesystem::path& path);
void write_frames(const std::filesystem::path& path, std::span<const FrameRecord> frames);
void write_detections(const std::filesystem::path& path, std::span<const FrameDetection> rows);

/// Validates frame ids, clips boxes to the frame (recording a warning), and
/// groups detections per frame in file order. Throws DataError.
Dataset assemble_dataset(std::vector<FrameRecord> frames, std::span<const FrameDetection> rows,
                         std::string_view source_name = "<memory>");

Dataset load_dataset(const std::filesystem::path& frames_file,
                     const std::filesystem::path& detections_file);
Dataset load_dataset(const std::filesystem::path& frames_file,
                     std::span<const std::filesystem::path> detection_files);

void save_dataset(const Dataset& dataset, const std::filesystem::path& frames_file,
                  const std::filesystem::path& detections_file);

inline constexpr double kPolypScoreThreshold = 0.25;
inline constexpr double kArtifactScoreThreshold = 0.5;

/// Keeps polyps with score >= polyp_threshold and artifacts with score >=
/// artifact_threshold. Ground-truth detections always pass.
std::vector<Detection> filter_by_score(std::span<const Detection> detections,
                                       double polyp_threshold = kPolypScoreThreshold,
                                       double artifact_threshold = kArtifactScoreThreshold);

/// Removes detections whose label is in `excluded`. Excluding 'polyp' is an error.
std::vector<Detection> drop_classes(std::span<const Detection> detections,
                                    const std::set<std::string>& excluded);

/// Applies filter_by_score and then drops every artifact outside `vocabulary`, per frame.
Dataset prepare_detections(const Dataset& dataset, const ClassVocabulary& vocabulary,
                           double polyp_threshold = kPolypScoreThreshold,
                           double artifact_threshold = kArtifactScoreThreshold);

}  // namespace boxgraph
