#include <fstream>
#include <iomanip>

#include "json.hpp"

#include "boxgraph/binary_io.hpp"
#include "boxgraph/error.hpp"
#include "boxgraph/sage.hpp"

namespace boxgraph {

using nlohmann::json;

namespace {

constexpr std::uint32_t kModelVersion = 1;

void put_matrix(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) binary::put<double>(out, m(i, j));
}

Matrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = binary::get<double>(in);
    return m;
}

json train_config_json(const TrainConfig& c) {
    return {{"hidden_width", c.hidden_width},   {"sample_layer1", c.sample_layer1},
            {"sample_layer2", c.sample_layer2}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},               {"learning_rate", c.learning_rate},
            {"rng_seed", c.rng_seed},           {"class_mode", std::string(to_string(c.class_mode))}};
}

TrainConfig train_config_from(const json& j) {
    TrainConfig c;
    c.hidden_width = j.at("hidden_width").get<std::size_t>();
    c.sample_layer1 = j.at("sample_layer1").get<std::size_t>();
    c.sample_layer2 = j.at("sample_layer2").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.class_mode = parse_class_mode(j.at("class_mode").get<std::string>());
    return c;
}

json graph_config_json(const GraphConfig& c) {
    return {{"criteria", c.criteria.names()},
            {"iou_threshold", c.iou_threshold},
            {"random_p", c.random_p},
            {"scope", std::string(to_string(c.scope))},
            {"rng_seed", c.rng_seed}};
}

GraphConfig graph_config_from(const json& j) {
    GraphConfig c;
    c.criteria = CriteriaSet::from_names(j.at("criteria").get<std::vector<std::string>>());
    c.iou_threshold = j.at("iou_threshold").get<double>();
    c.random_p = j.at("random_p").get<double>();
    c.scope = parse_scope(j.at("scope").get<std::string>());
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void write_model(const std::filesystem::path& path, const SageModel& model) {
    const SageParams& p = model.params;
    p.check_shapes();
    if (static_cast<std::size_t>(model.standardizer.mean.size()) != p.feature_dim())
        throw std::invalid_argument("standardizer length differs from model input");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write("BGSM", 4);
    binary::put<std::uint32_t>(out, kModelVersion);
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.feature_dim()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.hidden_dim()));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.class_count()));
    binary::put<std::uint32_t>(out, model.class_mode == ClassMode::binary ? 1u : 0u);
    binary::put_string(out, model.vocabulary.name());
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.vocabulary.size()));
    for (const auto& l : model.vocabulary.labels()) binary::put_string(out, l);
    for (Eigen::Index i = 0; i < model.standardizer.mean.size(); ++i) binary::put<double>(out, model.standardizer.mean(i));
    for (Eigen::Index i = 0; i < model.standardizer.scale.size(); ++i) binary::put<double>(out, model.standardizer.scale(i));
    put_matrix(out, p.w1);
    put_matrix(out, p.w2);
    put_matrix(out, p.w_out);
    json trailer{{"train_config", train_config_json(model.train_config)},
                 {"graph_config", graph_config_json(model.graph_config)}};
    if (!model.provenance.empty()) trailer["provenance"] = json::parse(model.provenance);
    binary::put_string(out, trailer.dump());
}

SageModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    binary::expect_magic(in, "BGSM", path.string());
    const auto version = binary::get<std::uint32_t>(in);
    if (version != kModelVersion)
        throw DataError(path.string() + ": unsupported model version " + std::to_string(version));
    const auto f = static_cast<Eigen::Index>(binary::get<std::uint32_t>(in));
    const auto h = static_cast<Eigen::Index>(binary::get<std::uint32_t>(in));
    const auto c = static_cast<Eigen::Index>(binary::get<std::uint32_t>(in));
    SageModel m;
    m.class_mode = binary::get<std::uint32_t>(in) == 1 ? ClassMode::binary : ClassMode::multiclass;
    const std::string vocab_name = binary::get_string(in);
    const auto label_count = binary::get<std::uint32_t>(in);
    std::vector<std::string> labels;
    for (std::uint32_t i = 0; i < label_count; ++i) labels.push_back(binary::get_string(in));
    try {
        m.vocabulary = ClassVocabulary(labels, vocab_name);
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (static_cast<Eigen::Index>(m.class_labels().size()) != c)
        throw DataError(path.string() + ": class count does not match the vocabulary");
    m.standardizer.mean.resize(f);
    m.standardizer.scale.resize(f);
    for (Eigen::Index i = 0; i < f; ++i) m.standardizer.mean(i) = binary::get<double>(in);
    for (Eigen::Index i = 0; i < f; ++i) m.standardizer.scale(i) = binary::get<double>(in);
    m.params.w1 = get_matrix(in, h, 2 * f);
    m.params.w2 = get_matrix(in, h, 2 * h);
    m.params.w_out = get_matrix(in, c, h);
    try {
        const json trailer = json::parse(binary::get_string(in));
        m.train_config = train_config_from(trailer.at("train_config"));
        m.graph_config = graph_config_from(trailer.at("graph_config"));
        if (trailer.contains("provenance")) m.provenance = trailer.at("provenance").dump();
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": bad model trailer: " + e.what());
    }
    return m;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const EpochStats> trace) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch,mean_loss,train_accuracy\n" << std::setprecision(17);
    for (const auto& e : trace) out << e.epoch << ',' << e.mean_loss << ',' << e.train_accuracy << '\n';
}

}  // namespace boxgraph
