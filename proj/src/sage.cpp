#include "boxgraph/sage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "boxgraph/error.hpp"
#include "boxgraph/rng.hpp"

namespace boxgraph {

std::string_view to_string(ClassMode m) { return m == ClassMode::binary ? "binary" : "multiclass"; }

ClassMode parse_class_mode(std::string_view s) {
    if (s == "multiclass") return ClassMode::multiclass;
    if (s == "binary") return ClassMode::binary;
    throw std::invalid_argument("unknown class mode '" + std::string(s) + "' (expected multiclass or binary)");
}

void TrainConfig::validate() const {
    if (sample_layer1 < 1 || sample_layer2 < 1) throw std::invalid_argument("sample sizes must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

// ---------------------------------------------------------------------------
// Parameters

SageParams SageParams::zeros(std::size_t features, std::size_t hidden, std::size_t classes) {
    const auto f = static_cast<Eigen::Index>(features);
    const auto h = static_cast<Eigen::Index>(hidden);
    const auto c = static_cast<Eigen::Index>(classes);
    return {Matrix::Zero(h, 2 * f), Matrix::Zero(h, 2 * h), Matrix::Zero(c, h)};
}

SageParams SageParams::random(std::size_t features, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
    SageParams p = zeros(features, hidden, classes);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](Matrix& m) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };
    fill(p.w1);
    fill(p.w2);
    fill(p.w_out);
    return p;
}

bool SageParams::all_finite() const { return w1.allFinite() && w2.allFinite() && w_out.allFinite(); }

void SageParams::check_shapes() const {
    if (w1.cols() % 2 != 0 || w2.rows() != w1.rows() || w2.cols() != 2 * w1.rows() || w_out.cols() != w1.rows())
        throw DataError("inconsistent classifier parameter shapes");
}

double& SageParams::at(std::size_t flat_index) {
    auto i = static_cast<Eigen::Index>(flat_index);
    if (i < w1.size()) return w1.data()[i];
    i -= w1.size();
    if (i < w2.size()) return w2.data()[i];
    i -= w2.size();
    if (i < w_out.size()) return w_out.data()[i];
    throw std::out_of_range("parameter index out of range");
}

void SageParams::axpy(double alpha, const SageParams& other) {
    w1 += alpha * other.w1;
    w2 += alpha * other.w2;
    w_out += alpha * other.w_out;
}

// ---------------------------------------------------------------------------
// Features

Standardizer Standardizer::fit(const Matrix& raw) {
    Standardizer s;
    const auto n = static_cast<double>(raw.rows());
    s.mean = raw.colwise().mean().transpose();
    s.scale = Vector::Ones(raw.cols());
    if (raw.rows() == 0) return s;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        const double var = (raw.col(j).array() - s.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {Vector::Zero(d), Vector::Ones(d)};
}

Matrix Standardizer::apply(const Matrix& raw) const {
    if (raw.cols() != mean.size()) throw DataError("feature length does not match the standardizer");
    return (raw.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Matrix feature_matrix(const std::vector<NodeRecord>& nodes) {
    if (nodes.empty()) return Matrix(0, 0);
    const auto dim = nodes.front().features.size();
    Matrix m(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].features.size() != dim) throw DataError("nodes carry feature vectors of different lengths");
        for (std::size_t j = 0; j < dim; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = nodes[i].features[j];
    }
    return m;
}

// ---------------------------------------------------------------------------
// Sampling and aggregation

std::vector<NodeId> sample_neighbors(const BoxGraph& graph, NodeId node, std::size_t k, std::mt19937_64& rng) {
    if (node >= graph.adjacency.size()) throw std::out_of_range("unknown node id " + std::to_string(node));
    const auto& adj = graph.adjacency[node];
    if (adj.size() <= k) return adj;
    std::vector<NodeId> out;
    out.reserve(k);
    std::sample(adj.begin(), adj.end(), std::back_inserter(out), k, rng);
    return out;
}

Vector mean_aggregate(const Matrix& features, std::span<const NodeId> rows) {
    Vector acc = Vector::Zero(features.cols());
    if (rows.empty()) return acc;
    for (NodeId r : rows) acc += features.row(r).transpose();
    return acc / static_cast<double>(rows.size());
}

Vector mean_aggregate(std::span<const Vector> vectors, std::size_t dim) {
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(dim));
    if (vectors.empty()) return acc;
    for (const auto& v : vectors) {
        if (v.size() != acc.size()) throw std::invalid_argument("mean_aggregate: inconsistent vector lengths");
        acc += v;
    }
    return acc / static_cast<double>(vectors.size());
}

SampledBatch sample_batch(const BoxGraph& graph, std::span<const NodeId> targets, std::size_t sample_layer1,
                          std::size_t sample_layer2, std::mt19937_64& rng) {
    SampledBatch b;
    b.targets.assign(targets.begin(), targets.end());
    std::unordered_map<NodeId, std::size_t> slot;
    auto intern = [&](NodeId id) {
        const auto [it, inserted] = slot.emplace(id, b.layer1_nodes.size());
        if (inserted) b.layer1_nodes.push_back(id);
        return it->second;
    };
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (intern(targets[i]) != i) throw std::invalid_argument("batch targets must be distinct");
    b.layer2_neighbors.reserve(targets.size());
    for (NodeId t : targets) {
        std::vector<std::size_t> slots;
        for (NodeId n : sample_neighbors(graph, t, sample_layer2, rng)) slots.push_back(intern(n));
        b.layer2_neighbors.push_back(std::move(slots));
    }
    b.layer1_neighbors.reserve(b.layer1_nodes.size());
    for (std::size_t i = 0; i < b.layer1_nodes.size(); ++i)
        b.layer1_neighbors.push_back(sample_neighbors(graph, b.layer1_nodes[i], sample_layer1, rng));
    return b;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void check_dims(const SageParams& params, const Matrix& features) {
    params.check_shapes();
    if (static_cast<std::size_t>(features.cols()) != params.feature_dim())
        throw DataError("feature length " + std::to_string(features.cols()) + " does not match model input " +
                        std::to_string(params.feature_dim()));
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

std::size_t argmax_row(const Matrix& m, Eigen::Index row) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
        if (m(row, c) > m(row, best)) best = c;
    return static_cast<std::size_t>(best);
}

}  // namespace

ForwardCache forward(const SageParams& params, const Matrix& features, const SampledBatch& batch) {
    check_dims(params, features);
    const Eigen::Index f = features.cols();
    const auto h = static_cast<Eigen::Index>(params.hidden_dim());
    const auto n1 = static_cast<Eigen::Index>(batch.layer1_nodes.size());
    const auto nb = static_cast<Eigen::Index>(batch.targets.size());

    ForwardCache c;
    c.input1.resize(n1, 2 * f);
    for (Eigen::Index i = 0; i < n1; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        c.input1.row(i).head(f) = features.row(batch.layer1_nodes[idx]);
        c.input1.row(i).tail(f) = mean_aggregate(features, batch.layer1_neighbors[idx]).transpose();
    }
    c.pre1.noalias() = c.input1 * params.w1.transpose();
    c.h1 = relu(c.pre1);

    c.input2.resize(nb, 2 * h);
    for (Eigen::Index b = 0; b < nb; ++b) {
        const auto& nbrs = batch.layer2_neighbors[static_cast<std::size_t>(b)];
        // Targets occupy the first slots of layer1_nodes.
        c.input2.row(b).head(h) = c.h1.row(b);
        Vector acc = Vector::Zero(h);
        for (std::size_t s : nbrs) acc += c.h1.row(static_cast<Eigen::Index>(s)).transpose();
        if (!nbrs.empty()) acc /= static_cast<double>(nbrs.size());
        c.input2.row(b).tail(h) = acc.transpose();
    }
    c.pre2.noalias() = c.input2 * params.w2.transpose();
    c.h2 = relu(c.pre2);
    c.logits.noalias() = c.h2 * params.w_out.transpose();
    return c;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        p.row(r) = (logits.row(r).array() - m).exp();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

namespace {

double cross_entropy(const Matrix& logits, const SampledBatch& batch, std::span<const std::size_t> labels,
                     std::size_t classes, std::size_t* correct) {
    double total = 0.0;
    for (Eigen::Index b = 0; b < logits.rows(); ++b) {
        const std::size_t y = labels[batch.targets[static_cast<std::size_t>(b)]];
        if (y >= classes) throw DataError("label " + std::to_string(y) + " out of range");
        const double m = logits.row(b).maxCoeff();
        const double lse = m + std::log((logits.row(b).array() - m).exp().sum());
        total += lse - logits(b, static_cast<Eigen::Index>(y));
        if (correct != nullptr && argmax_row(logits, b) == y) ++*correct;
    }
    return logits.rows() > 0 ? total / static_cast<double>(logits.rows()) : 0.0;
}

void check_labels(const SampledBatch& batch, std::span<const std::size_t> labels) {
    for (NodeId t : batch.targets)
        if (t >= labels.size()) throw DataError("missing label for node " + std::to_string(t));
}

}  // namespace

double loss_only(const SageParams& params, const Matrix& features, const SampledBatch& batch,
                 std::span<const std::size_t> labels) {
    check_labels(batch, labels);
    const ForwardCache c = forward(params, features, batch);
    return cross_entropy(c.logits, batch, labels, params.class_count(), nullptr);
}

LossGrad loss_and_grad(const SageParams& params, const Matrix& features, const SampledBatch& batch,
                       std::span<const std::size_t> labels) {
    check_labels(batch, labels);
    const ForwardCache c = forward(params, features, batch);
    LossGrad out;
    out.loss = cross_entropy(c.logits, batch, labels, params.class_count(), &out.correct);

    const auto nb = c.logits.rows();
    const auto h = static_cast<Eigen::Index>(params.hidden_dim());
    Matrix d_logits = softmax_rows(c.logits);
    for (Eigen::Index b = 0; b < nb; ++b)
        d_logits(b, static_cast<Eigen::Index>(labels[batch.targets[static_cast<std::size_t>(b)]])) -= 1.0;
    if (nb > 0) d_logits /= static_cast<double>(nb);

    out.grad.w_out.noalias() = d_logits.transpose() * c.h2;
    Matrix d_pre2 = d_logits * params.w_out;
    d_pre2.array() *= (c.pre2.array() > 0.0).cast<double>();
    out.grad.w2.noalias() = d_pre2.transpose() * c.input2;
    const Matrix d_input2 = d_pre2 * params.w2;

    Matrix d_pre1 = Matrix::Zero(c.h1.rows(), h);
    for (Eigen::Index b = 0; b < nb; ++b) {
        d_pre1.row(b) += d_input2.row(b).head(h);
        const auto& nbrs = batch.layer2_neighbors[static_cast<std::size_t>(b)];
        if (nbrs.empty()) continue;
        const double w = 1.0 / static_cast<double>(nbrs.size());
        for (std::size_t s : nbrs) d_pre1.row(static_cast<Eigen::Index>(s)) += w * d_input2.row(b).tail(h);
    }
    d_pre1.array() *= (c.pre1.array() > 0.0).cast<double>();
    out.grad.w1.noalias() = d_pre1.transpose() * c.input1;
    return out;
}

// ---------------------------------------------------------------------------
// Training and inference

std::vector<std::string> output_labels(const ClassVocabulary& vocabulary, ClassMode mode) {
    if (mode == ClassMode::binary) return {std::string(kPolypLabel), "artifact"};
    return vocabulary.labels();
}

std::vector<std::size_t> node_labels(const BoxGraph& graph, ClassMode mode) {
    std::vector<std::size_t> labels;
    labels.reserve(graph.nodes.size());
    for (const auto& n : graph.nodes)
        labels.push_back(mode == ClassMode::binary ? (n.is_polyp() ? 0 : 1) : n.class_index);
    return labels;
}

TrainResult train(const BoxGraph& graph, std::span<const std::size_t> labels, const TrainConfig& cfg) {
    cfg.validate();
    if (graph.nodes.empty()) throw DataError("cannot train on an empty graph");
    if (labels.size() != graph.nodes.size()) throw DataError("expected one label per node");
    const std::size_t classes = output_labels(graph.vocabulary, cfg.class_mode).size();
    for (std::size_t y : labels)
        if (y >= classes) throw DataError("label " + std::to_string(y) + " out of range");
    if (cfg.class_mode == ClassMode::multiclass &&
        std::all_of(labels.begin(), labels.end(), [&](std::size_t y) { return y == labels.front(); }))
        throw DataError("training labels contain a single class");

    const Matrix raw = feature_matrix(graph.nodes);
    TrainResult result;
    SageModel& model = result.model;
    model.standardizer = Standardizer::fit(raw);
    model.vocabulary = graph.vocabulary;
    model.class_mode = cfg.class_mode;
    model.train_config = cfg;
    model.graph_config = graph.config;
    const Matrix features = model.standardizer.apply(raw);
    model.params = SageParams::random(static_cast<std::size_t>(features.cols()), cfg.hidden_width, classes,
                                      derive_seed({cfg.rng_seed, 0x1417}));

    std::vector<NodeId> order(graph.nodes.size());
    std::iota(order.begin(), order.end(), NodeId{0});
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(derive_seed({cfg.rng_seed, 0x5eed, epoch}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const std::span<const NodeId> targets(order.data() + start, end - start);
            std::mt19937_64 rng(derive_seed({cfg.rng_seed, epoch, batch_index}));
            const SampledBatch batch = sample_batch(graph, targets, cfg.sample_layer1, cfg.sample_layer2, rng);
            const LossGrad lg = loss_and_grad(model.params, features, batch, labels);
            loss_sum += lg.loss * static_cast<double>(targets.size());
            correct += lg.correct;
            model.params.axpy(-cfg.learning_rate, lg.grad);
        }
        const auto n = static_cast<double>(order.size());
        result.trace.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
        if (!std::isfinite(loss_sum)) throw DataError("training diverged (non-finite loss)");
    }
    return result;
}

Prediction predict(const SageParams& params, const Standardizer& standardizer, const BoxGraph& graph,
                   const TrainConfig& cfg, std::uint64_t seed) {
    params.check_shapes();
    Prediction out;
    const auto classes = static_cast<Eigen::Index>(params.class_count());
    if (graph.nodes.empty()) {
        out.probabilities = Matrix(0, classes);
        return out;
    }
    const Matrix features = standardizer.apply(feature_matrix(graph.nodes));
    check_dims(params, features);
    const std::size_t cap = cfg.inference_cap();
    const auto n = static_cast<Eigen::Index>(graph.nodes.size());
    const Eigen::Index f = features.cols();
    const auto h = static_cast<Eigen::Index>(params.hidden_dim());

    auto neighbors = [&](NodeId id, std::uint64_t layer) {
        std::mt19937_64 rng(derive_seed({seed, layer, id}));
        return sample_neighbors(graph, id, cap, rng);
    };

    Matrix input1(n, 2 * f);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto id = static_cast<NodeId>(i);
        input1.row(i).head(f) = features.row(i);
        input1.row(i).tail(f) = mean_aggregate(features, neighbors(id, 1)).transpose();
    }
    const Matrix h1 = relu(input1 * params.w1.transpose());
    Matrix input2(n, 2 * h);
    for (Eigen::Index i = 0; i < n; ++i) {
        input2.row(i).head(h) = h1.row(i);
        input2.row(i).tail(h) = mean_aggregate(h1, neighbors(static_cast<NodeId>(i), 2)).transpose();
    }
    const Matrix h2 = relu(input2 * params.w2.transpose());
    const Matrix logits = h2 * params.w_out.transpose();
    out.probabilities = softmax_rows(logits);
    out.class_index.reserve(graph.nodes.size());
    for (Eigen::Index i = 0; i < n; ++i) out.class_index.push_back(argmax_row(logits, i));
    return out;
}

Prediction predict(const SageModel& model, const BoxGraph& graph, std::uint64_t seed) {
    return predict(model.params, model.standardizer, graph, model.train_config, seed);
}

}  // namespace boxgraph
