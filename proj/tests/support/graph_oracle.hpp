#pragma once

// Independent re-statement of the connectivity rules as a naive double loop,
// plus a generator of random node sets with plenty of overlapping boxes.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "boxgraph/graph.hpp"

namespace oracle {

inline double box_iou(const boxgraph::BoundingBox& a, const boxgraph::BoundingBox& b) {
    const double w = std::max(0.0, std::min(a.x_min + a.width, b.x_min + b.width) - std::max(a.x_min, b.x_min));
    const double h = std::max(0.0, std::min(a.y_min + a.height, b.y_min + b.height) - std::max(a.y_min, b.y_min));
    const double inter = w * h;
    return inter / (a.width * a.height + b.width * b.height - inter);
}

inline bool inside(const boxgraph::BoundingBox& outer, const boxgraph::BoundingBox& inner) {
    return outer.x_min <= inner.x_min && outer.y_min <= inner.y_min &&
           inner.x_min + inner.width <= outer.x_min + outer.width &&
           inner.y_min + inner.height <= outer.y_min + outer.height;
}

inline bool linked(const boxgraph::NodeRecord& a, const boxgraph::NodeRecord& b, const boxgraph::GraphConfig& cfg) {
    const bool same_frame = a.frame_id == b.frame_id;
    const bool in_scope = same_frame || cfg.scope == boxgraph::Scope::dataset_level || a.video_id == b.video_id;
    bool edge = false;
    if (cfg.criteria.overlap && same_frame)
        edge = edge || box_iou(a.bbox, b.bbox) > cfg.iou_threshold || inside(a.bbox, b.bbox) || inside(b.bbox, a.bbox);
    if (cfg.criteria.same_class && in_scope) edge = edge || a.class_index == b.class_index;
    if (cfg.criteria.binary && in_scope) edge = edge || ((a.class_index == 0) == (b.class_index == 0));
    if (cfg.criteria.random && in_scope)
        edge = edge || boxgraph::pair_uniform(cfg.rng_seed, a.node_id, b.node_id) < cfg.random_p;
    return edge;
}

inline std::vector<std::vector<boxgraph::NodeId>> adjacency(const std::vector<boxgraph::NodeRecord>& nodes,
                                                           const boxgraph::GraphConfig& cfg) {
    std::vector<std::vector<boxgraph::NodeId>> adj(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (i != j && linked(nodes[i], nodes[j], cfg)) adj[i].push_back(static_cast<boxgraph::NodeId>(j));
    return adj;
}

/// Nodes spread over `videos` videos with `frames` frames each; boxes are
/// drawn near a few anchors so overlaps and containments are common.
inline std::vector<boxgraph::NodeRecord> random_nodes(std::mt19937_64& rng, std::size_t n, int videos, int frames,
                                                     std::size_t classes) {
    std::uniform_int_distribution<int> video(0, videos - 1), frame(0, frames - 1);
    std::uniform_int_distribution<std::size_t> cls(0, classes - 1);
    std::uniform_int_distribution<int> anchor(0, 2);
    std::uniform_real_distribution<double> jitter(-6, 6), size(10, 40);
    std::vector<boxgraph::NodeRecord> nodes;
    for (std::size_t i = 0; i < n; ++i) {
        boxgraph::NodeRecord r;
        r.node_id = static_cast<boxgraph::NodeId>(i);
        const int v = video(rng);
        r.video_id = "v" + std::to_string(v);
        r.frame_id = r.video_id + "_f" + std::to_string(frame(rng));
        const double a = 30.0 * anchor(rng);
        r.bbox = {a + jitter(rng) + 10, a + jitter(rng) + 10, size(rng), size(rng)};
        r.class_index = cls(rng);
        nodes.push_back(std::move(r));
    }
    // frame order, as build_nodes produces
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const auto& x, const auto& y) { return x.frame_id < y.frame_id; });
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].node_id = static_cast<boxgraph::NodeId>(i);
    return nodes;
}

inline boxgraph::GraphConfig random_config(std::mt19937_64& rng) {
    boxgraph::GraphConfig cfg;
    std::bernoulli_distribution coin(0.5);
    do {
        cfg.criteria.random = coin(rng);
        cfg.criteria.overlap = coin(rng);
        const int cls = std::uniform_int_distribution<int>(0, 2)(rng);
        cfg.criteria.same_class = cls == 1;
        cfg.criteria.binary = cls == 2;
    } while (cfg.criteria.empty());
    cfg.scope = coin(rng) ? boxgraph::Scope::dataset_level : boxgraph::Scope::video_level;
    cfg.iou_threshold = std::uniform_real_distribution<double>(0.2, 0.7)(rng);
    cfg.random_p = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    cfg.rng_seed = rng();
    return cfg;
}

}  // namespace oracle
