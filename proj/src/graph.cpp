#include "boxgraph/graph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "boxgraph/error.hpp"
#include "boxgraph/rng.hpp"

namespace boxgraph {

using nlohmann::json;

CriteriaSet CriteriaSet::from_names(const std::vector<std::string>& names) {
    CriteriaSet c;
    for (const auto& raw : names) {
        std::string n = raw;
        std::replace(n.begin(), n.end(), '_', '-');
        if (n == "random") c.random = true;
        else if (n == "overlap") c.overlap = true;
        else if (n == "same-class") c.same_class = true;
        else if (n == "binary") c.binary = true;
        else throw std::invalid_argument("unknown criterion '" + raw +
                                         "' (expected random, overlap, same-class, binary)");
    }
    return c;
}

CriteriaSet CriteriaSet::parse(std::string_view csv) {
    std::vector<std::string> names;
    std::string item;
    std::istringstream in{std::string(csv)};
    while (std::getline(in, item, ','))
        if (!item.empty()) names.push_back(item);
    return from_names(names);
}

std::vector<std::string> CriteriaSet::names() const {
    std::vector<std::string> out;
    if (random) out.emplace_back("random");
    if (overlap) out.emplace_back("overlap");
    if (same_class) out.emplace_back("same-class");
    if (binary) out.emplace_back("binary");
    return out;
}

std::string CriteriaSet::to_string() const {
    std::string s;
    for (const auto& n : names()) s += (s.empty() ? "" : ",") + n;
    return s;
}

std::string_view to_string(Scope s) { return s == Scope::video_level ? "video" : "dataset"; }

Scope parse_scope(std::string_view s) {
    if (s == "video" || s == "vl" || s == "video_level" || s == "video-level") return Scope::video_level;
    if (s == "dataset" || s == "dl" || s == "dataset_level" || s == "dataset-level") return Scope::dataset_level;
    throw std::invalid_argument("unknown scope '" + std::string(s) + "' (expected video or dataset)");
}

void GraphConfig::validate() const {
    if (criteria.same_class && criteria.binary)
        throw UsageError("criteria same-class and binary cannot be combined");
    if (!(random_p >= 0.0 && random_p <= 1.0)) throw std::invalid_argument("random_p must be in [0,1]");
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
        throw std::invalid_argument("iou_threshold must be in (0,1)");
}

std::size_t BoxGraph::edge_count() const {
    std::size_t twice = 0;
    for (const auto& a : adjacency) twice += a.size();
    return twice / 2;
}

std::vector<NodeRecord> build_nodes(const Dataset& dataset, const ClassVocabulary& vocabulary,
                                    std::vector<std::vector<float>> features) {
    if (features.size() != dataset.detection_count())
        throw DataError("expected one feature vector per detection (" + std::to_string(dataset.detection_count()) +
                        "), got " + std::to_string(features.size()));
    std::vector<NodeRecord> nodes;
    nodes.reserve(features.size());
    for (std::size_t f = 0; f < dataset.frames.size(); ++f) {
        const FrameRecord& frame = dataset.frames[f];
        for (const Detection& d : dataset.detections[f]) {
            const auto cls = vocabulary.index_of(d.class_label);
            if (!cls)
                throw DataError("detection class '" + d.class_label + "' in frame \"" + frame.frame_id +
                                "\" is not in vocabulary " + vocabulary.name());
            NodeRecord n;
            n.node_id = static_cast<NodeId>(nodes.size());
            n.frame_id = frame.frame_id;
            n.video_id = frame.video_id;
            n.bbox = d.bbox;
            n.class_index = *cls;
            n.features = std::move(features[nodes.size()]);
            n.score = d.score;
            nodes.push_back(std::move(n));
        }
    }
    return nodes;
}

double pair_uniform(std::uint64_t seed, NodeId a, NodeId b) {
    const NodeId lo = std::min(a, b);
    const NodeId hi = std::max(a, b);
    return to_unit(derive_seed({seed, lo, hi}));
}

namespace {

bool overlapping(const BoundingBox& a, const BoundingBox& b, double threshold) {
    return iou(a, b) > threshold || contains(a, b) || contains(b, a);
}

bool scope_permits(const NodeRecord& a, const NodeRecord& b, Scope scope) {
    return a.frame_id == b.frame_id || scope == Scope::dataset_level || a.video_id == b.video_id;
}

}  // namespace

bool edge_decision(const NodeRecord& a, const NodeRecord& b, const GraphConfig& cfg) {
    if (a.node_id == b.node_id) throw std::invalid_argument("edge_decision requires two distinct nodes");
    const auto& c = cfg.criteria;
    const bool same_frame = a.frame_id == b.frame_id;
    if (c.overlap && same_frame && overlapping(a.bbox, b.bbox, cfg.iou_threshold)) return true;
    if (!scope_permits(a, b, cfg.scope)) return false;
    if (c.same_class && a.class_index == b.class_index) return true;
    if (c.binary && a.is_polyp() == b.is_polyp()) return true;
    if (c.random && pair_uniform(cfg.rng_seed, a.node_id, b.node_id) < cfg.random_p) return true;
    return false;
}

namespace {

using Groups = std::vector<std::vector<NodeId>>;

template <typename KeyFn>
Groups group_by(const std::vector<NodeRecord>& nodes, KeyFn key) {
    std::map<decltype(key(nodes.front())), std::vector<NodeId>> groups;
    for (const auto& n : nodes) groups[key(n)].push_back(n.node_id);
    Groups out;
    for (auto& [_, members] : groups) out.push_back(std::move(members));
    return out;
}

void link(std::vector<std::vector<NodeId>>& adj, NodeId a, NodeId b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
}

void link_clique(std::vector<std::vector<NodeId>>& adj, const std::vector<NodeId>& members) {
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j) link(adj, members[i], members[j]);
}

}  // namespace

BoxGraph build_graph(std::vector<NodeRecord> nodes, const GraphConfig& cfg, const ClassVocabulary& vocabulary) {
    cfg.validate();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].node_id != i) throw DataError("node ids must be consecutive from 0");
        if (nodes[i].class_index >= vocabulary.size()) throw DataError("node class index outside vocabulary");
    }
    BoxGraph g;
    g.config = cfg;
    g.vocabulary = vocabulary;
    g.adjacency.resize(nodes.size());
    auto& adj = g.adjacency;
    const auto& c = cfg.criteria;

    if (!nodes.empty()) {
        // Groups inside which every pair is eligible under the scope rule.
        const Groups scope_groups =
            cfg.scope == Scope::dataset_level
                ? Groups{[&] {
                      std::vector<NodeId> all(nodes.size());
                      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
                      return all;
                  }()}
                : group_by(nodes, [](const NodeRecord& n) { return n.video_id; });
        // Frames are nested in videos, so in-frame pairs are always inside one scope group.

        if (c.overlap) {
            for (const auto& frame : group_by(nodes, [](const NodeRecord& n) { return n.frame_id; }))
                for (std::size_t i = 0; i < frame.size(); ++i)
                    for (std::size_t j = i + 1; j < frame.size(); ++j)
                        if (overlapping(nodes[frame[i]].bbox, nodes[frame[j]].bbox, cfg.iou_threshold))
                            link(adj, frame[i], frame[j]);
        }
        if (c.same_class || c.binary) {
            for (const auto& scope : scope_groups) {
                std::map<std::size_t, std::vector<NodeId>> by_class;
                for (NodeId id : scope) {
                    const std::size_t key = c.same_class ? nodes[id].class_index : (nodes[id].is_polyp() ? 0 : 1);
                    by_class[key].push_back(id);
                }
                for (const auto& [_, members] : by_class) link_clique(adj, members);
            }
        }
        if (c.random) {
            for (const auto& scope : scope_groups)
                for (std::size_t i = 0; i < scope.size(); ++i)
                    for (std::size_t j = i + 1; j < scope.size(); ++j)
                        if (pair_uniform(cfg.rng_seed, scope[i], scope[j]) < cfg.random_p)
                            link(adj, scope[i], scope[j]);
        }
    }

    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    g.nodes = std::move(nodes);
    return g;
}

DegreeStats degree_stats(const BoxGraph& graph) {
    DegreeStats s;
    if (graph.adjacency.empty()) return s;
    s.min_degree = graph.adjacency.front().size();
    std::size_t total = 0;
    for (const auto& list : graph.adjacency) {
        s.min_degree = std::min(s.min_degree, list.size());
        s.max_degree = std::max(s.max_degree, list.size());
        if (list.empty()) ++s.isolated;
        total += list.size();
    }
    s.edges = total / 2;
    s.mean_degree = static_cast<double>(total) / static_cast<double>(graph.adjacency.size());
    return s;
}

namespace {

json config_to_json(const GraphConfig& cfg) {
    return {{"criteria", cfg.criteria.names()},
            {"iou_threshold", cfg.iou_threshold},
            {"random_p", cfg.random_p},
            {"scope", std::string(to_string(cfg.scope))},
            {"rng_seed", cfg.rng_seed}};
}

GraphConfig config_from_json(const json& j) {
    GraphConfig cfg;
    cfg.criteria = CriteriaSet::from_names(j.at("criteria").get<std::vector<std::string>>());
    cfg.iou_threshold = j.at("iou_threshold").get<double>();
    cfg.random_p = j.at("random_p").get<double>();
    cfg.scope = parse_scope(j.at("scope").get<std::string>());
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

void write_graph(const std::filesystem::path& path, const BoxGraph& graph) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    const json header{{"format", "boxgraph-graph"},
                      {"version", 1},
                      {"config", config_to_json(graph.config)},
                      {"vocabulary", {{"name", graph.vocabulary.name()}, {"labels", graph.vocabulary.labels()}}},
                      {"node_count", graph.node_count()},
                      {"edge_count", graph.edge_count()}};
    out << header.dump() << '\n';
    for (const auto& n : graph.nodes) {
        const json j{{"node_id", n.node_id},
                     {"frame_id", n.frame_id},
                     {"video_id", n.video_id},
                     {"class", graph.vocabulary.label(n.class_index)},
                     {"score", n.score},
                     {"x", n.bbox.x_min},
                     {"y", n.bbox.y_min},
                     {"w", n.bbox.width},
                     {"h", n.bbox.height}};
        out << j.dump() << '\n';
    }
    for (NodeId i = 0; i < graph.adjacency.size(); ++i)
        for (NodeId j : graph.adjacency[i])
            if (i < j) out << i << ' ' << j << '\n';
}

BoxGraph read_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 1;
    auto fail = [&](const std::string& what) -> DataError {
        return DataError(path.string() + ':' + std::to_string(line_no) + ": " + what);
    };
    if (!std::getline(in, line)) throw fail("empty graph file");
    BoxGraph g;
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    try {
        const json header = json::parse(line);
        if (header.at("format") != "boxgraph-graph") throw fail("not a boxgraph graph file");
        g.config = config_from_json(header.at("config"));
        const auto& v = header.at("vocabulary");
        g.vocabulary = ClassVocabulary(v.at("labels").get<std::vector<std::string>>(), v.at("name").get<std::string>());
        node_count = header.at("node_count").get<std::size_t>();
        edge_count = header.at("edge_count").get<std::size_t>();
        for (std::size_t i = 0; i < node_count; ++i) {
            ++line_no;
            if (!std::getline(in, line)) throw fail("missing node record");
            const json j = json::parse(line);
            NodeRecord n;
            n.node_id = j.at("node_id").get<NodeId>();
            if (n.node_id != i) throw fail("node ids must be consecutive");
            n.frame_id = j.at("frame_id").get<std::string>();
            n.video_id = j.at("video_id").get<std::string>();
            const auto cls = g.vocabulary.index_of(j.at("class").get<std::string>());
            if (!cls) throw fail("node class outside vocabulary");
            n.class_index = *cls;
            n.score = j.at("score").get<double>();
            n.bbox = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
                      j.at("h").get<double>()};
            g.nodes.push_back(std::move(n));
        }
    } catch (const json::exception& e) {
        throw fail(e.what());
    } catch (const std::invalid_argument& e) {
        throw fail(e.what());
    }
    g.adjacency.resize(node_count);
    for (std::size_t e = 0; e < edge_count; ++e) {
        ++line_no;
        if (!std::getline(in, line)) throw fail("missing edge record");
        std::istringstream ls(line);
        NodeId a = 0;
        NodeId b = 0;
        if (!(ls >> a >> b) || a >= b || b >= node_count) throw fail("malformed edge '" + line + "'");
        g.adjacency[a].push_back(b);
        g.adjacency[b].push_back(a);
    }
    for (auto& list : g.adjacency) std::sort(list.begin(), list.end());
    return g;
}

}  // namespace boxgraph
