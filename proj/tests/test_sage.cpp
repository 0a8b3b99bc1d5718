#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "boxgraph/error.hpp"
#include "boxgraph/sage.hpp"
#include "sage_fixtures.hpp"
#include "temp_dir.hpp"

using namespace boxgraph;

using testing_support::graph_from;
using testing_support::identity_ids;
using testing_support::toy_config;
using testing_support::toy_graph;

namespace {

NodeRecord node(NodeId id, std::size_t cls, std::vector<float> f) {
    return testing_support::plain_node(id, cls, std::move(f));
}

}  // namespace

TEST_CASE("sample_neighbors") {
    std::vector<NodeRecord> nodes;
    for (NodeId i = 0; i < 105; ++i) nodes.push_back(node(i, 0, {0.0f}));
    std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}, {0, 2}, {0, 3}};
    for (NodeId i = 5; i < 105; ++i) edges.emplace_back(4, i);
    const BoxGraph g = graph_from(nodes, edges);
    std::mt19937_64 rng(1);

    CHECK(sample_neighbors(g, 0, 10, rng) == std::vector<NodeId>{1, 2, 3});
    CHECK(sample_neighbors(g, 4, 0, rng).empty());
    nodes.push_back(node(105, 0, {0.0f}));
    const BoxGraph with_isolated = graph_from(nodes, edges);
    CHECK(sample_neighbors(with_isolated, 105, 10, rng).empty());
    CHECK_THROWS_AS(sample_neighbors(g, 999, 3, rng), std::out_of_range);

    std::map<NodeId, int> counts;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const auto s = sample_neighbors(g, 4, 10, rng);
        REQUIRE(s.size() == 10);
        REQUIRE(std::set<NodeId>(s.begin(), s.end()).size() == 10);
        for (NodeId id : s) ++counts[id];
    }
    REQUIRE(counts.size() == 100);
    const double expected = draws * 10.0 / 100.0;
    double chi2 = 0.0;
    for (const auto& [_, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 99 degrees of freedom: P(chi2 > 148.23) = 0.001
    CHECK(chi2 < 148.23);
}

TEST_CASE("mean_aggregate") {
    const std::vector<Vector> two{Vector::Unit(2, 0), Vector::Unit(2, 1)};
    CHECK(mean_aggregate(two, 2).isApprox(Vector::Constant(2, 0.5)));
    CHECK(mean_aggregate(std::span<const Vector>{}, 4) == Vector::Zero(4));
    Vector v(3);
    v << 1.5, -2, 7;
    CHECK(mean_aggregate(std::vector<Vector>{v}, 3) == v);
    CHECK_THROWS_AS(mean_aggregate(std::vector<Vector>{v, Vector::Zero(2)}, 3), std::invalid_argument);

    Matrix m(3, 2);
    m << 1, 2, 3, 4, 5, 6;
    const std::vector<NodeId> rows{0, 2};
    CHECK(mean_aggregate(m, rows).isApprox(Vector::Map(std::array<double, 2>{3, 4}.data(), 2)));
}

TEST_CASE("forward on a hand-computed four-node graph") {
    const BoxGraph g = graph_from({node(0, 0, {1, 2}), node(1, 0, {0, 1}), node(2, 0, {-1, 0.5}), node(3, 0, {2, -1})},
                                  {{0, 1}, {0, 2}, {2, 3}});
    SageParams p = SageParams::zeros(2, 2, 2);
    p.w1 << 0.5, -1, 0.25, 1, -0.5, 0.5, 1, -0.25;
    p.w2 << 1, -0.5, 0.5, 0.25, 0.25, 1, -1, 0.5;
    p.w_out << 1, -1, -0.5, 2;
    std::mt19937_64 rng(0);
    const std::vector<NodeId> targets{0, 1, 2, 3};
    const auto batch = sample_batch(g, targets, 10, 10, rng);
    const auto c = forward(p, feature_matrix(g.nodes), batch);
    Matrix expected(4, 2);
    expected << 0.546875, -0.0390625, -0.5625, 2.25, -1.0, 2.0, 1.15625, 1.859375;
    CHECK((c.logits - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero weights give zero logits; isolated nodes see only themselves") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    std::vector<NodeRecord> nodes;
    for (NodeId i = 0; i < 6; ++i)
        nodes.push_back(node(i, i % 2, {float(gauss(rng)), float(gauss(rng)), float(gauss(rng))}));
    const BoxGraph connected = graph_from(nodes, {{0, 1}, {1, 2}, {3, 4}, {0, 5}});
    const BoxGraph isolated = graph_from(nodes, {});
    const std::vector<NodeId> targets{0, 1, 2, 3, 4, 5};
    const Matrix x = feature_matrix(nodes);

    const auto zero = forward(SageParams::zeros(3, 4, 2), x, sample_batch(connected, targets, 5, 5, rng));
    CHECK(zero.logits.isZero(0.0));

    const SageParams p = SageParams::random(3, 4, 2, 9);
    const auto c = forward(p, x, sample_batch(isolated, targets, 5, 5, rng));
    CHECK(c.input1.rightCols(3).isZero(0.0));
    CHECK(c.input2.rightCols(4).isZero(0.0));
    // node i alone, by direct evaluation
    for (Eigen::Index i = 0; i < 6; ++i) {
        Vector in1 = Vector::Zero(6);
        in1.head(3) = x.row(i).transpose();
        const Vector h1 = (p.w1 * in1).cwiseMax(0.0);
        Vector in2 = Vector::Zero(8);
        in2.head(4) = h1;
        const Vector logits = p.w_out * (p.w2 * in2).cwiseMax(0.0);
        CHECK((c.logits.row(i).transpose() - logits).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("uniform logits give loss ln C") {
    const BoxGraph g = graph_from({node(0, 0, {1, 2}), node(1, 1, {3, 1}), node(2, 2, {0, 1})}, {{0, 1}});
    std::mt19937_64 rng(0);
    const std::vector<NodeId> targets{0, 1, 2};
    const std::vector<std::size_t> labels{0, 1, 2};
    const auto batch = sample_batch(g, targets, 5, 5, rng);
    const double loss = loss_only(SageParams::zeros(2, 3, 3), feature_matrix(g.nodes), batch, labels);
    CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("identical nodes give identical gradient contributions") {
    std::vector<NodeRecord> nodes;
    for (NodeId i = 0; i < 4; ++i) nodes.push_back(node(i, 1, {0.5f, -1.0f}));
    const BoxGraph g = graph_from(nodes, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    const SageParams p = SageParams::random(2, 3, 2, 4);
    const Matrix x = feature_matrix(nodes);
    const std::vector<std::size_t> labels(4, 1);
    std::mt19937_64 rng(0);
    const std::vector<NodeId> one{0}, other{2};
    const auto a = loss_and_grad(p, x, sample_batch(g, one, 2, 2, rng), labels);
    const auto b = loss_and_grad(p, x, sample_batch(g, other, 2, 2, rng), labels);
    CHECK(a.loss == b.loss);
    CHECK((a.grad.w1 - b.grad.w1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.grad.w_out - b.grad.w_out).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) CHECK(testing_support::gradient_check_error(seed) < 1e-4);
}

TEST_CASE("training on the toy graph") {
    const BoxGraph g = toy_graph(identity_ids(40));
    const auto labels = node_labels(g, ClassMode::multiclass);
    const TrainResult a = train(g, labels, toy_config(5));
    const TrainResult b = train(g, labels, toy_config(5));
    CHECK(a.model.params.w1 == b.model.params.w1);
    CHECK(a.model.params.w_out == b.model.params.w_out);
    REQUIRE(a.trace.size() == 200);
    for (const auto& e : a.trace) CHECK(std::isfinite(e.mean_loss));

    // 10-epoch moving average of the loss never rises beyond neighbor-sampling jitter
    std::vector<double> avg;
    for (std::size_t i = 10; i <= a.trace.size(); ++i) {
        double s = 0;
        for (std::size_t j = i - 10; j < i; ++j) s += a.trace[j].mean_loss;
        avg.push_back(s / 10);
    }
    for (std::size_t i = 1; i < avg.size(); ++i) CHECK(avg[i] <= avg[i - 1] * 1.01);

    const Prediction pred = predict(a.model, g, 1);
    std::size_t right = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) right += pred.class_index[i] == labels[i];
    CHECK(right >= 40 * 0.99);

    SUBCASE("predictions follow the nodes, not their ids") {
        std::vector<NodeId> perm = identity_ids(40);
        std::shuffle(perm.begin(), perm.end(), std::mt19937_64(8));
        const BoxGraph moved = toy_graph(perm);
        const Prediction p2 = predict(a.model, moved, 1);
        for (std::size_t i = 0; i < 40; ++i) CHECK(p2.class_index[perm[i]] == pred.class_index[i]);
    }
}

TEST_CASE("probabilities sum to one") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0, 3);
    std::vector<NodeRecord> nodes;
    for (NodeId i = 0; i < 30; ++i) nodes.push_back(node(i, i % 4, {float(gauss(rng)), float(gauss(rng))}));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 1; i < 30; ++i) edges.emplace_back(i - 1, i);
    const BoxGraph g = graph_from(nodes, edges);
    const Prediction p = predict(SageParams::random(2, 8, 4, 1), Standardizer::identity(2), g, TrainConfig{}, 0);
    for (Eigen::Index r = 0; r < p.probabilities.rows(); ++r) CHECK(std::abs(p.probabilities.row(r).sum() - 1.0) < 1e-9);
}

TEST_CASE("binary class mode") {
    const BoxGraph g = toy_graph(identity_ids(40));
    const auto labels = node_labels(g, ClassMode::binary);
    CHECK(std::count(labels.begin(), labels.end(), 1u) == 30);
    CHECK(output_labels(g.vocabulary, ClassMode::binary) == std::vector<std::string>{"polyp", "artifact"});
    TrainConfig cfg = toy_config(1);
    cfg.class_mode = ClassMode::binary;
    cfg.epochs = 20;
    const TrainResult r = train(g, labels, cfg);
    CHECK(r.model.params.class_count() == 2);
    CHECK(r.model.class_labels().size() == 2);
}

TEST_CASE("training input validation") {
    const BoxGraph g = toy_graph(identity_ids(8));
    CHECK_THROWS_AS(train(BoxGraph{}, std::vector<std::size_t>{}, TrainConfig{}), DataError);
    CHECK_THROWS_AS(train(g, std::vector<std::size_t>(3, 0), TrainConfig{}), DataError);
    CHECK_THROWS_AS(train(g, std::vector<std::size_t>(8, 0), TrainConfig{}), DataError);
    CHECK_THROWS_AS(train(g, std::vector<std::size_t>(8, 9), TrainConfig{}), DataError);
    TrainConfig bad;
    bad.learning_rate = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("model files round-trip") {
    testing_support::TempDir dir;
    const BoxGraph g = toy_graph(identity_ids(40));
    TrainConfig cfg = toy_config(3);
    cfg.epochs = 5;
    TrainResult r = train(g, node_labels(g, ClassMode::multiclass), cfg);
    r.model.provenance = R"({"note":"test"})";
    write_model(dir / "m.bgsm", r.model);
    const SageModel back = read_model(dir / "m.bgsm");
    CHECK(back.params.w1 == r.model.params.w1);
    CHECK(back.params.w2 == r.model.params.w2);
    CHECK(back.params.w_out == r.model.params.w_out);
    CHECK(back.standardizer.mean == r.model.standardizer.mean);
    CHECK(back.vocabulary == r.model.vocabulary);
    CHECK(back.train_config.epochs == 5);
    CHECK(back.graph_config == r.model.graph_config);
    CHECK(back.provenance == r.model.provenance);
    dir.write("junk.bgsm", "BGSM");
    CHECK_THROWS_AS(read_model(dir / "junk.bgsm"), DataError);

    write_loss_trace(dir / "t.csv", r.trace);
    CHECK(testing_support::slurp(dir / "t.csv").rfind("epoch,mean_loss,train_accuracy\n0,", 0) == 0);
}
