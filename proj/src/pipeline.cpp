#include "boxgraph/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "boxgraph/error.hpp"
#include "boxgraph/log.hpp"
#include "boxgraph/rng.hpp"

namespace boxgraph {

using nlohmann::json;

ImageProvider disk_images(std::filesystem::path base_dir) {
    return [base = std::move(base_dir)](const FrameRecord& frame) {
        std::filesystem::path p(frame.image_path);
        if (p.is_relative()) p = base / p;
        Image img = read_image(p);
        if (img.width != frame.width || img.height != frame.height)
            throw DataError("image " + p.string() + " is " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + ", frame record says " + std::to_string(frame.width) +
                            "x" + std::to_string(frame.height));
        return img;
    };
}

std::vector<std::vector<float>> compute_features(const Dataset& dataset, const ImageProvider& images,
                                                 const HogConfig& hog, std::size_t threads) {
    std::vector<std::size_t> offsets(dataset.frames.size() + 1, 0);
    for (std::size_t f = 0; f < dataset.frames.size(); ++f)
        offsets[f + 1] = offsets[f] + dataset.detections[f].size();
    std::vector<std::vector<float>> out(offsets.back());

    auto work = [&](std::size_t f) {
        if (dataset.detections[f].empty()) return;
        const Image img = images(dataset.frames[f]);
        for (std::size_t d = 0; d < dataset.detections[f].size(); ++d)
            out[offsets[f] + d] = boxgraph::hog(crop_resize(img, dataset.detections[f][d].bbox), hog);
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, dataset.frames.size()));
    if (workers == 1) {
        for (std::size_t f = 0; f < dataset.frames.size(); ++f) work(f);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t f = next++; f < dataset.frames.size(); f = next++) {
                try {
                    work(f);
                } catch (...) {
                    std::scoped_lock lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return out;
}

BoxGraph graph_from_dataset(const Dataset& dataset, const ClassVocabulary& vocabulary, const GraphConfig& cfg,
                            const ImageProvider& images, const PipelineOptions& options) {
    cfg.validate();
    auto features = compute_features(dataset, images, options.hog, options.threads);
    return build_graph(build_nodes(dataset, vocabulary, std::move(features)), cfg, vocabulary);
}

Dataset training_dataset(const TrainInputs& inputs, const ClassVocabulary& vocabulary,
                         const PipelineOptions& options) {
    std::vector<FrameDetection> rows;
    for (const auto& r : inputs.ground_truth)
        if (r.detection.is_polyp() || options.gt_artifacts) rows.push_back(r);
    if (!options.gt_artifacts)
        for (const auto& r : inputs.artifact_detections)
            if (!r.detection.is_polyp()) rows.push_back(r);
    // Keep per-frame order stable: polyps first, then artifacts, each in file order.
    std::stable_partition(rows.begin(), rows.end(), [](const FrameDetection& r) { return r.detection.is_polyp(); });
    const Dataset raw = assemble_dataset(inputs.frames, rows, "training detections");
    return prepare_detections(raw, vocabulary, options.thresholds.polyp, options.thresholds.artifact);
}

namespace {

json thresholds_json(const Thresholds& t) { return {{"polyp", t.polyp}, {"artifact", t.artifact}}; }

}  // namespace

TrainResult train_pipeline(const TrainInputs& inputs, const ClassVocabulary& vocabulary,
                           const GraphConfig& graph_cfg, const TrainConfig& train_cfg, const ImageProvider& images,
                           const PipelineOptions& options) {
    graph_cfg.validate();
    train_cfg.validate();
    const Dataset ds = training_dataset(inputs, vocabulary, options);
    if (ds.detection_count() == 0) throw DataError("training set has no boxes after filtering");
    const BoxGraph graph = graph_from_dataset(ds, vocabulary, graph_cfg, images, options);
    const auto stats = degree_stats(graph);
    log::info("training graph: " + std::to_string(graph.node_count()) + " nodes, " + std::to_string(stats.edges) +
              " edges, " + std::to_string(stats.isolated) + " isolated");
    const auto labels = node_labels(graph, train_cfg.class_mode);
    TrainResult result = train(graph, labels, train_cfg);
    result.model.provenance = json{{"vocabulary", vocabulary.name()},
                                   {"thresholds", thresholds_json(options.thresholds)},
                                   {"gt_artifacts", options.gt_artifacts},
                                   {"training_nodes", graph.node_count()},
                                   {"training_edges", stats.edges}}
                                  .dump();
    return result;
}

namespace {

std::vector<FrameDetection> inference_rows(const InferInputs& inputs) {
    std::vector<FrameDetection> rows;
    for (const auto& r : inputs.polyp_detections)
        if (r.detection.is_polyp()) rows.push_back(r);
    for (const auto& r : inputs.artifact_detections)
        if (!r.detection.is_polyp()) rows.push_back(r);
    return rows;
}

}  // namespace

std::vector<FrameDetection> baseline_polyps(const InferInputs& inputs, const Thresholds& thresholds) {
    std::vector<FrameDetection> out;
    for (const auto& r : inputs.polyp_detections) {
        if (!r.detection.is_polyp()) continue;
        const Detection one[] = {r.detection};
        if (!filter_by_score(one, thresholds.polyp, thresholds.artifact).empty()) out.push_back(r);
    }
    return out;
}

InferenceResult infer_pipeline(const SageModel& model, const InferInputs& inputs, const ImageProvider& images,
                               const std::optional<GraphConfig>& graph_cfg, const PipelineOptions& options) {
    const GraphConfig cfg = graph_cfg.value_or(model.graph_config);
    cfg.validate();
    if (!(cfg.criteria == model.graph_config.criteria))
        throw DataError("graph criteria '" + cfg.criteria.to_string() + "' do not match the model's training criteria '" +
                        model.graph_config.criteria.to_string() + "'");
    if (cfg.scope != model.graph_config.scope)
        log::warn("inference scope differs from the model's training scope");

    InferenceResult result;
    const Dataset raw = assemble_dataset(inputs.frames, inference_rows(inputs), "inference detections");
    result.warnings = raw.warnings;
    const Dataset ds = prepare_detections(raw, model.vocabulary, options.thresholds.polyp, options.thresholds.artifact);
    if (ds.detection_count() == 0) {
        result.warnings.emplace_back("no detections survived thresholding; outputs are empty");
        log::warn(result.warnings.back());
        return result;
    }

    const BoxGraph graph = graph_from_dataset(ds, model.vocabulary, cfg, images, options);
    const Prediction pred = predict(model, graph, derive_seed({cfg.rng_seed, 0x9e7}));
    const auto labels = model.class_labels();

    std::size_t node = 0;
    for (std::size_t f = 0; f < ds.frames.size(); ++f) {
        for (const Detection& d : ds.detections[f]) {
            const std::size_t cls = pred.class_index[node];
            RelabeledDetection r;
            r.frame_id = ds.frames[f].frame_id;
            r.detection = d;
            r.graph_class = labels[cls];
            r.graph_prob = pred.probabilities(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(cls));
            r.polyp_prob = pred.probabilities(static_cast<Eigen::Index>(node), 0);
            if (cls == ClassVocabulary::polyp_index) {
                Detection p = d;
                p.class_label = std::string(kPolypLabel);
                result.polyp_set.push_back({r.frame_id, p, 0});
            }
            result.relabeled.push_back(std::move(r));
            ++node;
        }
    }
    return result;
}

void write_relabeled(const std::filesystem::path& path, const std::vector<RelabeledDetection>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& r : rows) {
        const Detection& d = r.detection;
        const json j{{"frame_id", r.frame_id},
                     {"class", d.class_label},
                     {"score", d.score},
                     {"x", d.bbox.x_min},
                     {"y", d.bbox.y_min},
                     {"w", d.bbox.width},
                     {"h", d.bbox.height},
                     {"source", std::string(to_string(d.source))},
                     {"detector_class", d.class_label},
                     {"graph_class", r.graph_class},
                     {"graph_prob", r.graph_prob},
                     {"polyp_prob", r.polyp_prob}};
        out << j.dump() << '\n';
    }
}

std::vector<RelabeledDetection> read_relabeled(const std::filesystem::path& path) {
    const auto rows = read_detections(path);
    std::ifstream in(path);
    std::vector<RelabeledDetection> out;
    std::string line;
    std::size_t no = 0;
    std::size_t next = 0;
    while (std::getline(in, line)) {
        ++no;
        if (next >= rows.size() || rows[next].line != no) continue;
        try {
            const json j = json::parse(line);
            RelabeledDetection r;
            r.frame_id = rows[next].frame_id;
            r.detection = rows[next].detection;
            r.graph_class = j.at("graph_class").get<std::string>();
            r.graph_prob = j.at("graph_prob").get<double>();
            r.polyp_prob = j.value("polyp_prob", 0.0);
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ':' + std::to_string(no) + ": " + e.what());
        }
        ++next;
    }
    return out;
}

}  // namespace boxgraph
