#include "boxgraph/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "boxgraph/error.hpp"
#include "boxgraph/log.hpp"

namespace boxgraph {

using nlohmann::json;

const std::vector<std::string>& artifact_labels() {
    static const std::vector<std::string> labels{"saturation", "misc",       "blur",       "contrast",
                                                 "bubbles",    "instrument", "specularity"};
    return labels;
}

bool is_artifact_label(std::string_view label) {
    const auto& all = artifact_labels();
    return std::find(all.begin(), all.end(), label) != all.end();
}

bool is_known_label(std::string_view label) {
    return label == kPolypLabel || is_artifact_label(label);
}

std::string_view to_string(Source s) { return s == Source::ground_truth ? "gt" : "det"; }

Source parse_source(std::string_view s) {
    if (s == "gt") return Source::ground_truth;
    if (s == "det") return Source::detector;
    throw std::invalid_argument("source must be \"gt\" or \"det\", got \"" + std::string(s) + "\"");
}

ClassVocabulary::ClassVocabulary(std::vector<std::string> labels, std::string name)
    : name_(std::move(name)) {
    bool has_polyp = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!is_known_label(labels[i]))
            throw std::invalid_argument("unknown class label '" + labels[i] + "'");
        if (std::find(labels.begin() + static_cast<std::ptrdiff_t>(i) + 1, labels.end(), labels[i]) !=
            labels.end())
            throw std::invalid_argument("duplicate class label '" + labels[i] + "'");
        has_polyp = has_polyp || labels[i] == kPolypLabel;
    }
    if (!has_polyp) throw std::invalid_argument("vocabulary must contain 'polyp'");
    labels_.emplace_back(kPolypLabel);
    for (auto& l : labels)
        if (l != kPolypLabel) labels_.push_back(std::move(l));
}

std::optional<std::size_t> ClassVocabulary::index_of(std::string_view label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::set<std::string> ClassVocabulary::excluded_artifacts() const {
    std::set<std::string> out;
    for (const auto& a : artifact_labels())
        if (!contains(a)) out.insert(a);
    return out;
}

ClassVocabulary select_artifact_set(ArtifactSet set) {
    switch (set) {
    case ArtifactSet::art1:
        return ClassVocabulary(
            {"polyp", "saturation", "misc", "blur", "contrast", "bubbles", "instrument"}, "art1");
    case ArtifactSet::art2:
        return ClassVocabulary({"polyp", "misc", "blur", "bubbles"}, "art2");
    case ArtifactSet::art3:
        return ClassVocabulary({"polyp", "saturation", "blur", "contrast", "instrument"}, "art3");
    }
    throw std::logic_error("unhandled artifact set");
}

ClassVocabulary vocabulary_by_name(std::string_view name) {
    if (name == "art1") return select_artifact_set(ArtifactSet::art1);
    if (name == "art2") return select_artifact_set(ArtifactSet::art2);
    if (name == "art3") return select_artifact_set(ArtifactSet::art3);
    if (name == "all") {
        std::vector<std::string> labels{std::string(kPolypLabel)};
        for (const auto& a : artifact_labels()) labels.push_back(a);
        return ClassVocabulary(std::move(labels), "all");
    }
    throw std::invalid_argument("unknown vocabulary '" + std::string(name) +
                                "' (expected art1, art2, art3 or all)");
}

std::optional<std::size_t> Dataset::find_frame(std::string_view frame_id) const {
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (frames[i].frame_id == frame_id) return i;
    return std::nullopt;
}

std::size_t Dataset::detection_count() const {
    std::size_t n = 0;
    for (const auto& d : detections) n += d.size();
    return n;
}

std::vector<FrameDetection> Dataset::rows() const {
    std::vector<FrameDetection> out;
    out.reserve(detection_count());
    for (std::size_t f = 0; f < frames.size(); ++f)
        for (const auto& d : detections[f]) out.push_back({frames[f].frame_id, d, 0});
    return out;
}

namespace {

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << path.string() << ':' << line << ": " << what;
    throw DataError(msg.str());
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<FrameRecord> read_frames(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<FrameRecord> frames;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (blank(line)) continue;
        FrameRecord f;
        try {
            const json j = json::parse(line);
            f.frame_id = j.at("frame_id").get<std::string>();
            f.video_id = j.at("video_id").get<std::string>();
            f.image_path = j.at("image_path").get<std::string>();
            f.width = j.at("width").get<int>();
            f.height = j.at("height").get<int>();
        } catch (const json::exception& e) {
            fail_at(path, no, e.what());
        }
        if (f.width <= 0 || f.height <= 0) fail_at(path, no, "frame width/height must be positive");
        if (!seen.emplace(f.frame_id, no).second)
            fail_at(path, no, "duplicate frame_id \"" + f.frame_id + "\"");
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<FrameDetection> read_detections(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<FrameDetection> rows;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (blank(line)) continue;
        FrameDetection row;
        row.line = no;
        Detection& d = row.detection;
        try {
            const json j = json::parse(line);
            row.frame_id = j.at("frame_id").get<std::string>();
            d.class_label = j.at("class").get<std::string>();
            d.source = parse_source(j.at("source").get<std::string>());
            d.score = j.contains("score") ? j.at("score").get<double>() : 1.0;
            d.bbox = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
                      j.at("h").get<double>()};
        } catch (const json::exception& e) {
            fail_at(path, no, e.what());
        } catch (const std::invalid_argument& e) {
            fail_at(path, no, e.what());
        }
        if (!is_known_label(d.class_label))
            fail_at(path, no, "unknown class_label \"" + d.class_label + "\"");
        if (!(d.score >= 0.0 && d.score <= 1.0))
            fail_at(path, no, "score " + std::to_string(d.score) + " outside [0,1]");
        if (d.source == Source::ground_truth && d.score != 1.0)
            fail_at(path, no, "ground-truth detections must carry score 1.0");
        if (!d.bbox.valid()) {
            std::ostringstream msg;
            msg << "invalid box " << d.bbox;
            fail_at(path, no, msg.str());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_frames(const std::filesystem::path& path, std::span<const FrameRecord> frames) {
    auto out = open_output(path);
    for (const auto& f : frames) {
        json j;
        j["frame_id"] = f.frame_id;
        j["video_id"] = f.video_id;
        j["image_path"] = f.image_path;
        j["width"] = f.width;
        j["height"] = f.height;
        out << j.dump() << '\n';
    }
}

void write_detections(const std::filesystem::path& path, std::span<const FrameDetection> rows) {
    auto out = open_output(path);
    for (const auto& r : rows) {
        const Detection& d = r.detection;
        json j;
        j["frame_id"] = r.frame_id;
        j["class"] = d.class_label;
        j["score"] = d.score;
        j["x"] = d.bbox.x_min;
        j["y"] = d.bbox.y_min;
        j["w"] = d.bbox.width;
        j["h"] = d.bbox.height;
        j["source"] = to_string(d.source);
        out << j.dump() << '\n';
    }
}

Dataset assemble_dataset(std::vector<FrameRecord> frames, std::span<const FrameDetection> rows,
                         std::string_view source_name) {
    Dataset ds;
    ds.frames = std::move(frames);
    ds.detections.resize(ds.frames.size());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        if (!index.emplace(ds.frames[i].frame_id, i).second)
            throw DataError("duplicate frame_id \"" + ds.frames[i].frame_id + "\"");
    }
    for (const auto& row : rows) {
        const auto it = index.find(row.frame_id);
        if (it == index.end()) {
            std::ostringstream msg;
            msg << source_name << ':' << row.line << ": unknown frame_id \"" << row.frame_id << '"';
            throw DataError(msg.str());
        }
        const FrameRecord& frame = ds.frames[it->second];
        Detection d = row.detection;
        if (!is_known_label(d.class_label)) {
            std::ostringstream msg;
            msg << source_name << ':' << row.line << ": unknown class_label \"" << d.class_label << '"';
            throw DataError(msg.str());
        }
        const BoundingBox before = d.bbox;
        // Rounding slack: x + w may land a few ulps past the border after a JSON round trip.
        constexpr double slack = 1e-9;
        const bool inside = d.bbox.x_min >= 0.0 && d.bbox.y_min >= 0.0 &&
                            d.bbox.x_max() <= frame.width + slack && d.bbox.y_max() <= frame.height + slack;
        if (!inside && !clip_to_frame(d.bbox, frame.width, frame.height)) {
            std::ostringstream msg;
            msg << source_name << ':' << row.line << ": box " << before << " lies outside frame \""
                << frame.frame_id << '"';
            throw DataError(msg.str());
        }
        if (!(d.bbox == before)) {
            std::ostringstream msg;
            msg << source_name << ':' << row.line << ": box " << before << " clipped to " << d.bbox
                << " in frame \"" << frame.frame_id << '"';
            ds.warnings.push_back(msg.str());
            log::debug(msg.str());
        }
        ds.detections[it->second].push_back(std::move(d));
    }
    if (!ds.warnings.empty())
        log::warn(std::to_string(ds.warnings.size()) + " box(es) clipped to frame bounds in " +
                  std::string(source_name));
    return ds;
}

Dataset load_dataset(const std::filesystem::path& frames_file,
                     const std::filesystem::path& detections_file) {
    return load_dataset(frames_file, std::span<const std::filesystem::path>(&detections_file, 1));
}

Dataset load_dataset(const std::filesystem::path& frames_file,
                     std::span<const std::filesystem::path> detection_files) {
    auto frames = read_frames(frames_file);
    Dataset ds;
    ds.frames = frames;
    ds.detections.resize(ds.frames.size());
    for (const auto& path : detection_files) {
        const auto rows = read_detections(path);
        Dataset part = assemble_dataset(frames, rows, path.string());
        for (std::size_t f = 0; f < frames.size(); ++f)
            for (auto& d : part.detections[f]) ds.detections[f].push_back(std::move(d));
        for (auto& w : part.warnings) ds.warnings.push_back(std::move(w));
    }
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& frames_file,
                  const std::filesystem::path& detections_file) {
    write_frames(frames_file, dataset.frames);
    write_detections(detections_file, dataset.rows());
}

namespace {

void check_threshold(double t, const char* name) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument(std::string(name) + " threshold must be in [0,1]");
}

}  // namespace

std::vector<Detection> filter_by_score(std::span<const Detection> detections, double polyp_threshold,
                                       double artifact_threshold) {
    check_threshold(polyp_threshold, "polyp");
    check_threshold(artifact_threshold, "artifact");
    std::vector<Detection> out;
    for (const auto& d : detections) {
        if (d.source == Source::ground_truth) {
            out.push_back(d);
            continue;
        }
        const double t = d.is_polyp() ? polyp_threshold : artifact_threshold;
        if (d.score >= t) out.push_back(d);
    }
    return out;
}

std::vector<Detection> drop_classes(std::span<const Detection> detections,
                                    const std::set<std::string>& excluded) {
    if (excluded.contains(std::string(kPolypLabel)))
        throw std::invalid_argument("'polyp' cannot be excluded");
    std::vector<Detection> out;
    for (const auto& d : detections)
        if (!excluded.contains(d.class_label)) out.push_back(d);
    return out;
}

Dataset prepare_detections(const Dataset& dataset, const ClassVocabulary& vocabulary,
                           double polyp_threshold, double artifact_threshold) {
    Dataset out;
    out.frames = dataset.frames;
    out.warnings = dataset.warnings;
    out.detections.reserve(dataset.detections.size());
    const auto excluded = vocabulary.excluded_artifacts();
    for (const auto& dets : dataset.detections)
        out.detections.push_back(
            drop_classes(filter_by_score(dets, polyp_threshold, artifact_threshold), excluded));
    return out;
}

}  // namespace boxgraph
