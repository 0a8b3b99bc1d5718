#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "boxgraph/dataset_io.hpp"
#include "boxgraph/geometry.hpp"

namespace boxgraph {

using NodeId = std::uint32_t;

/// Enabled connectivity criteria. CLI spellings: random, overlap, same-class, binary.
struct CriteriaSet {
    bool random = false;      // Bernoulli(random_p) per unordered pair
    bool overlap = false;     // in-frame, IoU above threshold or containment
    bool same_class = false;  // identical class index
    bool binary = false;      // both polyps or both artifacts

    bool empty() const { return !(random || overlap || same_class || binary); }
    /// Comma-separated list, e.g. "overlap,same-class". Throws std::invalid_argument.
    static CriteriaSet parse(std::string_view csv);
    static CriteriaSet from_names(const std::vector<std::string>& names);
    std::vector<std::string> names() const;
    std::string to_string() const;

    friend bool operator==(const CriteriaSet&, const CriteriaSet&) = default;
};

enum class Scope { video_level, dataset_level };

std::string_view to_string(Scope s);
/// Accepts "video"/"vl"/"video_level" and "dataset"/"dl"/"dataset_level".
Scope parse_scope(std::string_view s);

struct GraphConfig {
    CriteriaSet criteria;
    double iou_threshold = 0.5;
    double random_p = 0.5;
    Scope scope = Scope::dataset_level;
    std::uint64_t rng_seed = 0;

    /// Throws UsageError for same_class together with binary, std::invalid_argument for ranges.
    void validate() const;

    friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

struct NodeRecord {
    NodeId node_id = 0;
    std::string frame_id;
    std::string video_id;
    BoundingBox bbox;
    std::size_t class_index = 0;
    std::vector<float> features;
    double score = 1.0;

    bool is_polyp() const { return class_index == ClassVocabulary::polyp_index; }
};

struct BoxGraph {
    std::vector<NodeRecord> nodes;
    std::vector<std::vector<NodeId>> adjacency;  // sorted, symmetric, no self-loops
    GraphConfig config;
    ClassVocabulary vocabulary = vocabulary_by_name("all");

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const;
    const std::vector<NodeId>& neighbors(NodeId id) const { return adjacency.at(id); }
};

/// One node per detection, in frame order then detection order; `features`
/// holds one vector per detection in that same order. Throws DataError for a
/// class outside the vocabulary or a feature count mismatch.
std::vector<NodeRecord> build_nodes(const Dataset& dataset, const ClassVocabulary& vocabulary,
                                    std::vector<std::vector<float>> features);

/// Pair-keyed uniform draw in [0,1): depends only on (seed, {a, b}).
double pair_uniform(std::uint64_t seed, NodeId a, NodeId b);

/// Whether any enabled criterion links {a, b}. Throws std::invalid_argument when a and b share a node id.
bool edge_decision(const NodeRecord& a, const NodeRecord& b, const GraphConfig& cfg);

/// Builds adjacency by grouping nodes per frame/class/video rather than testing
/// every pair, then unions the criteria.
BoxGraph build_graph(std::vector<NodeRecord> nodes, const GraphConfig& cfg,
                     const ClassVocabulary& vocabulary);

struct DegreeStats {
    std::size_t min_degree = 0;
    double mean_degree = 0.0;
    std::size_t max_degree = 0;
    std::size_t isolated = 0;
    std::size_t edges = 0;
};

DegreeStats degree_stats(const BoxGraph& graph);

/// JSON header line, one JSON line per node, then "i j" lines (i < j) for edges.
/// Features are not part of this file (see the feature cache).
void write_graph(const std::filesystem::path& path, const BoxGraph& graph);
BoxGraph read_graph(const std::filesystem::path& path);

}  // namespace boxgraph
