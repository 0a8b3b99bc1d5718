#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "boxgraph/graph.hpp"

namespace boxgraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ClassMode { multiclass, binary };

std::string_view to_string(ClassMode m);
ClassMode parse_class_mode(std::string_view s);

/// Hyperparameters of the two-layer mean-aggregator classifier.
/// sample_layer1 neighbors are averaged into layer 1, sample_layer2 into layer 2.
struct TrainConfig {
    std::size_t hidden_width = 128;
    std::size_t sample_layer1 = 10;
    std::size_t sample_layer2 = 25;
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
    double learning_rate = 0.5;
    std::uint64_t rng_seed = 0;
    ClassMode class_mode = ClassMode::multiclass;

    void validate() const;
    /// Neighbor cap used at inference time.
    std::size_t inference_cap() const { return std::max(sample_layer1, sample_layer2) * 4; }
};

/// Layer weights: w1 is (h x 2F), w2 is (h x 2h), w_out is (C x h).
/// The left half of w1/w2 multiplies the node's own representation, the right
/// half the neighbor mean.
struct SageParams {
    Matrix w1;
    Matrix w2;
    Matrix w_out;

    static SageParams zeros(std::size_t features, std::size_t hidden, std::size_t classes);
    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    static SageParams random(std::size_t features, std::size_t hidden, std::size_t classes, std::uint64_t seed);

    std::size_t feature_dim() const { return static_cast<std::size_t>(w1.cols() / 2); }
    std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t class_count() const { return static_cast<std::size_t>(w_out.rows()); }
    std::size_t parameter_count() const { return static_cast<std::size_t>(w1.size() + w2.size() + w_out.size()); }
    bool all_finite() const;
    /// Throws DataError when the three matrices disagree on dimensions.
    void check_shapes() const;

    /// Flat view helpers for optimizers and gradient checks: w1, w2, w_out in column-major order.
    double& at(std::size_t flat_index);
    double at(std::size_t flat_index) const { return const_cast<SageParams&>(*this).at(flat_index); }
    void axpy(double alpha, const SageParams& other);  // this += alpha * other
};

/// Per-dimension standardization fitted on the training graph.
struct Standardizer {
    Vector mean;
    Vector scale;  // standard deviation, 1 where the dimension is constant

    static Standardizer fit(const Matrix& raw);
    static Standardizer identity(std::size_t dim);
    Matrix apply(const Matrix& raw) const;
};

/// Node features as an (N x F) matrix in node-id order. Throws DataError on ragged features.
Matrix feature_matrix(const std::vector<NodeRecord>& nodes);

/// Uniform sample without replacement of min(k, degree) neighbors.
std::vector<NodeId> sample_neighbors(const BoxGraph& graph, NodeId node, std::size_t k, std::mt19937_64& rng);

/// Elementwise mean of the listed rows of `features`; zero vector when `rows` is empty.
Vector mean_aggregate(const Matrix& features, std::span<const NodeId> rows);
/// Elementwise mean of explicit vectors; zero vector of length `dim` when empty.
Vector mean_aggregate(std::span<const Vector> vectors, std::size_t dim);

/// Realized two-hop computation graph for a batch. Layer-1 representations are
/// computed once per distinct node; the batch targets come first.
struct SampledBatch {
    std::vector<NodeId> targets;
    std::vector<NodeId> layer1_nodes;
    std::vector<std::vector<NodeId>> layer1_neighbors;       // per layer1 node, raw-feature neighbors
    std::vector<std::vector<std::size_t>> layer2_neighbors;  // per target, indices into layer1_nodes
};

SampledBatch sample_batch(const BoxGraph& graph, std::span<const NodeId> targets, std::size_t sample_layer1,
                          std::size_t sample_layer2, std::mt19937_64& rng);

struct ForwardCache {
    Matrix input1;  // |layer1_nodes| x 2F
    Matrix pre1;    // |layer1_nodes| x h
    Matrix h1;
    Matrix input2;  // |targets| x 2h
    Matrix pre2;
    Matrix h2;
    Matrix logits;  // |targets| x C
};

/// `features` are the (already standardized) rows for every node of the graph.
ForwardCache forward(const SageParams& params, const Matrix& features, const SampledBatch& batch);

/// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

struct LossGrad {
    double loss = 0.0;
    SageParams grad;
    std::size_t correct = 0;  // argmax hits in this batch
};

/// Mean softmax cross-entropy over the batch targets and its exact gradient for
/// the realized sample. `labels` is indexed by node id.
LossGrad loss_and_grad(const SageParams& params, const Matrix& features, const SampledBatch& batch,
                       std::span<const std::size_t> labels);
double loss_only(const SageParams& params, const Matrix& features, const SampledBatch& batch,
                 std::span<const std::size_t> labels);

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

/// Output class names for a vocabulary: the vocabulary itself in multiclass
/// mode, {"polyp", "artifact"} in binary mode.
std::vector<std::string> output_labels(const ClassVocabulary& vocabulary, ClassMode mode);
/// Node labels in output-class space (binary mode collapses every artifact to 1).
std::vector<std::size_t> node_labels(const BoxGraph& graph, ClassMode mode);

/// Trained classifier together with everything inference needs.
struct SageModel {
    SageParams params;
    Standardizer standardizer;
    ClassVocabulary vocabulary = vocabulary_by_name("all");
    ClassMode class_mode = ClassMode::multiclass;
    TrainConfig train_config;
    GraphConfig graph_config;
    std::string provenance;  // JSON text, informational

    std::vector<std::string> class_labels() const { return output_labels(vocabulary, class_mode); }
};

struct TrainResult {
    SageModel model;
    std::vector<EpochStats> trace;
};

/// Minibatch SGD on a fully labeled graph. Deterministic given cfg.rng_seed.
/// Throws DataError for an empty graph, out-of-range labels, or a single-class
/// label set in multiclass mode.
TrainResult train(const BoxGraph& graph, std::span<const std::size_t> labels, const TrainConfig& cfg);

struct Prediction {
    std::vector<std::size_t> class_index;
    Matrix probabilities;  // N x C
};

/// Inductive inference on an unseen graph. Neighborhoods larger than
/// cfg.inference_cap() are subsampled with per-node streams derived from
/// `seed`. Ties in argmax resolve to the lowest class index.
Prediction predict(const SageModel& model, const BoxGraph& graph, std::uint64_t seed);
Prediction predict(const SageParams& params, const Standardizer& standardizer, const BoxGraph& graph,
                   const TrainConfig& cfg, std::uint64_t seed);

/// BGSM model file: header {"BGSM", version, F, h, C, class_mode, vocabulary},
/// length-prefixed JSON trailer {train_config, graph_config, provenance}.
/// length-prefixed provenance JSON string.
void write_model(const std::filesystem::path& path, const SageModel& model);
SageModel read_model(const std::filesystem::path& path);

void write_loss_trace(const std::filesystem::path& path, std::span<const EpochStats> trace);

}  // namespace boxgraph
