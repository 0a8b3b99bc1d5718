#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "boxgraph/error.hpp"
#include "boxgraph/graph.hpp"
#include "graph_oracle.hpp"
#include "temp_dir.hpp"

using namespace boxgraph;

namespace {

NodeRecord node(NodeId id, const std::string& frame, const std::string& video, BoundingBox b, std::size_t cls) {
    NodeRecord n;
    n.node_id = id;
    n.frame_id = frame;
    n.video_id = video;
    n.bbox = b;
    n.class_index = cls;
    n.features = {0.0f};
    return n;
}

GraphConfig with(std::initializer_list<const char*> names, Scope scope = Scope::dataset_level) {
    GraphConfig c;
    c.criteria = CriteriaSet::from_names(std::vector<std::string>(names.begin(), names.end()));
    c.scope = scope;
    return c;
}

Detection det(const std::string& label) {
    Detection d;
    d.bbox = {1, 1, 10, 10};
    d.class_label = label;
    return d;
}

const ClassVocabulary& art1() {
    static const ClassVocabulary v = vocabulary_by_name("art1");
    return v;
}

}  // namespace

TEST_CASE("build_nodes counts") {
    const std::vector<FrameRecord> frames{{"a", "v", "a.png", 100, 100}, {"b", "v", "b.png", 100, 100}};
    const std::vector<FrameDetection> rows{{"a", det("polyp"), 0}, {"a", det("polyp"), 0}, {"a", det("blur"), 0},
                                           {"a", det("misc"), 0},  {"a", det("bubbles"), 0}, {"b", det("polyp"), 0}};
    const Dataset ds = assemble_dataset(frames, rows);
    const auto nodes = build_nodes(ds, art1(), std::vector<std::vector<float>>(6, std::vector<float>(3, 1.0f)));
    REQUIRE(nodes.size() == 6);
    CHECK(nodes[5].frame_id == "b");
    CHECK(nodes[5].node_id == 5);
    CHECK(nodes[2].class_index == *art1().index_of("blur"));
    CHECK(build_nodes(Dataset{}, art1(), {}).empty());
    CHECK_THROWS_AS(build_nodes(ds, art1(), {}), DataError);
    const Dataset specular = assemble_dataset(frames, std::vector<FrameDetection>{{"a", det("specularity"), 0}});
    CHECK_THROWS_AS(build_nodes(specular, art1(), {{1.0f}}), DataError);
}

TEST_CASE("380 single-polyp frames give 380 polyp nodes") {
    std::vector<FrameRecord> frames;
    std::vector<FrameDetection> rows;
    for (int i = 0; i < 380; ++i) {
        const std::string id = "f" + std::to_string(i);
        frames.push_back({id, "v" + std::to_string(i % 15), id + ".png", 100, 100});
        rows.push_back({id, det("polyp"), 0});
        if (i % 4 == 0) rows.push_back({id, det("blur"), 0});
    }
    const Dataset ds = assemble_dataset(frames, rows);
    const auto nodes = build_nodes(ds, art1(), std::vector<std::vector<float>>(ds.detection_count(), {0.0f}));
    CHECK(std::count_if(nodes.begin(), nodes.end(), [](const NodeRecord& n) { return n.is_polyp(); }) == 380);
    CHECK(nodes.size() == 475);
}

TEST_CASE("edge_decision rules") {
    const auto polyp = node(0, "f1", "v1", {0, 0, 100, 100}, 0);
    const auto bubble = node(1, "f1", "v1", {10, 10, 50, 50}, 5);
    CHECK(edge_decision(polyp, bubble, with({"overlap"})));

    const auto blur_a = node(2, "f1", "v1", {0, 0, 10, 10}, 3);
    const auto blur_b = node(3, "f2", "v2", {50, 50, 10, 10}, 3);
    const auto polyp_b = node(4, "f2", "v2", {50, 50, 10, 10}, 0);
    CHECK(edge_decision(blur_a, blur_b, with({"same-class"})));
    CHECK_FALSE(edge_decision(blur_a, polyp_b, with({"binary"})));
    CHECK(edge_decision(blur_a, blur_b, with({"binary"})));
    CHECK_FALSE(edge_decision(blur_a, blur_b, with({"binary"}, Scope::video_level)));
    // overlap never crosses frames
    CHECK_FALSE(edge_decision(node(5, "f3", "v1", {50, 50, 10, 10}, 1), blur_b, with({"overlap"})));
    CHECK_THROWS_AS(edge_decision(blur_a, blur_a, with({"overlap"})), std::invalid_argument);
}

TEST_CASE("iou threshold is strict") {
    // IoU of these two is exactly 1/3
    const auto a = node(0, "f", "v", {0, 0, 10, 10}, 0);
    const auto b = node(1, "f", "v", {5, 0, 10, 10}, 1);
    GraphConfig c = with({"overlap"});
    c.iou_threshold = 0.25;
    CHECK(edge_decision(a, b, c));
    c.iou_threshold = 0.5;
    CHECK_FALSE(edge_decision(a, b, c));
}

TEST_CASE("in-frame edges ignore the scope") {
    const auto a = node(0, "f", "v1", {0, 0, 10, 10}, 2);
    const auto b = node(1, "f", "v1", {40, 40, 10, 10}, 2);
    CHECK(edge_decision(a, b, with({"same-class"}, Scope::video_level)));
}

TEST_CASE("configuration validation") {
    CHECK_THROWS_AS(with({"same-class", "binary"}).validate(), UsageError);
    GraphConfig c = with({"random"});
    c.random_p = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.random_p = 0.5;
    c.iou_threshold = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(CriteriaSet::parse("overlap,color"), std::invalid_argument);
    CHECK(CriteriaSet::parse("overlap,same-class") == CriteriaSet::from_names({"same_class", "overlap"}));
    CHECK(parse_scope("vl") == Scope::video_level);
    CHECK_THROWS_AS(parse_scope("frame"), std::invalid_argument);
}

TEST_CASE("build_graph agrees with the naive oracle") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const auto cfg = oracle::random_config(rng);
        const auto nodes = oracle::random_nodes(rng, 60, 3, 4, 7);
        const BoxGraph g = build_graph(nodes, cfg, art1());
        CHECK(g.adjacency == oracle::adjacency(nodes, cfg));
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                const bool has = std::binary_search(g.adjacency[i].begin(), g.adjacency[i].end(), NodeId(j));
                REQUIRE(has == edge_decision(nodes[i], nodes[j], cfg));
            }
    }
}

TEST_CASE("small graphs") {
    CHECK(build_graph({}, with({"binary"}), art1()).edge_count() == 0);
    CHECK(build_graph({node(0, "f", "v", {0, 0, 5, 5}, 0)}, with({"random"}), art1()).edge_count() == 0);
}

TEST_CASE("random criterion edge count is binomial") {
    const std::size_t n = 120;
    std::vector<NodeRecord> nodes;
    for (NodeId i = 0; i < n; ++i) nodes.push_back(node(i, "f" + std::to_string(i), "v", {0, 0, 5, 5}, i % 3));
    const double pairs = n * (n - 1) / 2.0;
    const double sd = std::sqrt(pairs * 0.25);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GraphConfig c = with({"random"});
        c.rng_seed = seed;
        const double edges = static_cast<double>(build_graph(nodes, c, art1()).edge_count());
        CHECK(std::abs(edges - 0.5 * pairs) < 4 * sd);
    }
}

TEST_CASE("random edges do not depend on node enumeration order") {
    CHECK(pair_uniform(9, 3, 11) == pair_uniform(9, 11, 3));
    CHECK(pair_uniform(9, 3, 11) != pair_uniform(10, 3, 11));
}

TEST_CASE("degree_stats") {
    const DegreeStats empty = degree_stats(BoxGraph{});
    CHECK(empty.edges == 0);
    CHECK(empty.max_degree == 0);
    CHECK(empty.mean_degree == 0.0);

    std::vector<NodeRecord> k4;
    for (NodeId i = 0; i < 4; ++i) k4.push_back(node(i, "f", "v", {0, 0, 5, 5}, 1));
    const DegreeStats s4 = degree_stats(build_graph(k4, with({"same-class"}), art1()));
    CHECK(s4.edges == 6);
    CHECK(s4.min_degree == 3);
    CHECK(s4.max_degree == 3);

    std::vector<NodeRecord> five;
    for (NodeId i = 0; i < 5; ++i) five.push_back(node(i, "f" + std::to_string(i), "v" + std::to_string(i), {0, 0, 5, 5}, i < 3 ? 0 : 2 + i));
    const BoxGraph g = build_graph(five, with({"binary"}), art1());
    CHECK(g.neighbors(0).size() == 2);
    CHECK(g.neighbors(4).size() == 1);
    const DegreeStats s = degree_stats(g);
    CHECK(s.edges == 4);
    CHECK(s.isolated == 0);
    CHECK(s.mean_degree == doctest::Approx(8.0 / 5.0));
}

TEST_CASE("graph files round-trip and are deterministic") {
    testing_support::TempDir dir;
    std::mt19937_64 rng(4);
    auto nodes = oracle::random_nodes(rng, 40, 2, 3, 7);
    GraphConfig cfg = with({"overlap", "random"});
    cfg.rng_seed = 7;
    const BoxGraph g = build_graph(nodes, cfg, art1());
    write_graph(dir / "a.graph", g);
    write_graph(dir / "b.graph", build_graph(nodes, cfg, art1()));
    CHECK(testing_support::slurp(dir / "a.graph") == testing_support::slurp(dir / "b.graph"));
    const BoxGraph back = read_graph(dir / "a.graph");
    CHECK(back.adjacency == g.adjacency);
    CHECK(back.config == g.config);
    CHECK(back.vocabulary == g.vocabulary);
    REQUIRE(back.nodes.size() == g.nodes.size());
    CHECK(back.nodes[7].bbox == g.nodes[7].bbox);
    CHECK(back.nodes[7].frame_id == g.nodes[7].frame_id);
}
