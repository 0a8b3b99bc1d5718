#include "boxgraph/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "boxgraph/error.hpp"
#include "boxgraph/log.hpp"

namespace boxgraph {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const json& j, const char* key) {
    std::filesystem::path p(j.at(key).get<std::string>());
    return p.is_relative() ? base / p : p;
}

}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    Manifest m;
    m.base_dir = path.parent_path();
    try {
        const json j = json::parse(in);
        const json& train = j.at("train");
        const json& test = j.at("test");
        m.train_frames = resolve(m.base_dir, train, "frames");
        m.train_gt = resolve(m.base_dir, train, "gt");
        if (train.contains("artifacts")) m.train_artifacts = resolve(m.base_dir, train, "artifacts");
        m.test_frames = resolve(m.base_dir, test, "frames");
        m.test_gt = resolve(m.base_dir, test, "gt");
        m.test_polyps = resolve(m.base_dir, test, "polyps");
        m.test_artifacts = test.contains("artifacts") ? resolve(m.base_dir, test, "artifacts") : m.test_polyps;
        if (j.contains("thresholds")) {
            m.options.thresholds.polyp = j["thresholds"].value("polyp", kPolypScoreThreshold);
            m.options.thresholds.artifact = j["thresholds"].value("artifact", kArtifactScoreThreshold);
        }
        m.options.gt_artifacts = j.value("gt_artifacts", false);
        if (m.train_artifacts.empty() && !m.options.gt_artifacts)
            throw DataError("manifest train section needs \"artifacts\" unless gt_artifacts is true");
        if (j.contains("train_config")) {
            const json& t = j["train_config"];
            m.train.hidden_width = t.value("hidden_width", m.train.hidden_width);
            m.train.sample_layer1 = t.value("sample_layer1", m.train.sample_layer1);
            m.train.sample_layer2 = t.value("sample_layer2", m.train.sample_layer2);
            m.train.batch_size = t.value("batch_size", m.train.batch_size);
            m.train.epochs = t.value("epochs", m.train.epochs);
            m.train.learning_rate = t.value("learning_rate", m.train.learning_rate);
        }
        if (j.contains("graph")) {
            m.iou_threshold = j["graph"].value("iou_threshold", m.iou_threshold);
            m.random_p = j["graph"].value("random_p", m.random_p);
        }
        for (const json& c : j.at("configurations")) {
            ExperimentConfiguration base;
            base.model = c.at("model").get<std::string>();
            base.baseline = c.value("baseline", false);
            if (!base.baseline) {
                base.vocabulary = c.value("vocabulary", std::string("art1"));
                base.criteria = CriteriaSet::from_names(c.at("criteria").get<std::vector<std::string>>());
                base.scope = parse_scope(c.value("scope", std::string("dataset")));
                base.class_mode = parse_class_mode(c.value("class_mode", std::string("multiclass")));
            }
            std::vector<std::uint64_t> seeds;
            if (c.contains("seeds")) seeds = c["seeds"].get<std::vector<std::uint64_t>>();
            else seeds.push_back(c.value("seed", std::uint64_t{0}));
            for (std::uint64_t s : seeds) {
                ExperimentConfiguration row = base;
                row.seed = s;
                if (seeds.size() > 1) row.model += " [seed " + std::to_string(s) + "]";
                m.configurations.push_back(std::move(row));
            }
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return m;
}

ExperimentData load_experiment_data(const Manifest& m) {
    ExperimentData d;
    d.train.frames = read_frames(m.train_frames);
    d.train.ground_truth = read_detections(m.train_gt);
    if (!m.train_artifacts.empty()) d.train.artifact_detections = read_detections(m.train_artifacts);
    d.test.frames = read_frames(m.test_frames);
    d.test.polyp_detections = read_detections(m.test_polyps);
    d.test.artifact_detections =
        m.test_artifacts == m.test_polyps ? d.test.polyp_detections : read_detections(m.test_artifacts);
    d.test_ground_truth = read_detections(m.test_gt);
    d.train_images = disk_images(m.train_frames.parent_path());
    d.test_images = disk_images(m.test_frames.parent_path());
    return d;
}

std::vector<ReportRow> run_experiment(const Manifest& manifest, const ExperimentData& data) {
    std::vector<ReportRow> rows;
    for (const auto& cfg : manifest.configurations) {
        ReportRow row;
        row.config = cfg;
        try {
            if (cfg.baseline) {
                row.metrics = evaluate_polyps(baseline_polyps(data.test, manifest.options.thresholds),
                                              data.test_ground_truth);
            } else {
                GraphConfig g;
                g.criteria = cfg.criteria;
                g.scope = cfg.scope;
                g.iou_threshold = manifest.iou_threshold;
                g.random_p = manifest.random_p;
                g.rng_seed = cfg.seed;
                TrainConfig t = manifest.train;
                t.class_mode = cfg.class_mode;
                t.rng_seed = cfg.seed;
                const auto vocab = vocabulary_by_name(cfg.vocabulary);
                const TrainResult trained =
                    train_pipeline(data.train, vocab, g, t, data.train_images, manifest.options);
                const InferenceResult inferred =
                    infer_pipeline(trained.model, data.test, data.test_images, g, manifest.options);
                row.metrics = evaluate_polyps(inferred.polyp_set, data.test_ground_truth);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
            log::error("configuration '" + cfg.model + "' failed: " + row.error);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ReportRow> run_experiment(const std::filesystem::path& manifest_file) {
    const Manifest m = read_manifest(manifest_file);
    return run_experiment(m, load_experiment_data(m));
}

namespace {

std::string cc_column(const ExperimentConfiguration& c) {
    return c.baseline ? "n/a" : c.criteria.to_string() + (c.class_mode == ClassMode::binary ? " (bin)" : "");
}

std::string ifc_column(const ExperimentConfiguration& c) {
    return c.baseline ? "n/a" : (c.scope == Scope::dataset_level ? "dl" : "vl");
}

}  // namespace

std::string report_table(const std::vector<ReportRow>& rows) {
    int model_width = 22;
    for (const auto& r : rows) model_width = std::max(model_width, static_cast<int>(r.config.model.size()) + 2);
    std::ostringstream os;
    os << std::left << std::setw(model_width) << "model" << std::setw(11) << "art. class" << std::setw(26) << "cc"
       << std::setw(5) << "ifc" << std::setw(6) << "TP" << std::setw(6) << "FP" << std::setw(6) << "FN"
       << std::setw(11) << "Precision" << std::setw(8) << "Recall" << std::setw(7) << "F1"
       << "F2\n";
    for (const auto& r : rows) {
        const auto& c = r.config;
        os << std::setw(model_width) << c.model << std::setw(11) << (c.baseline ? "n/a" : c.vocabulary) << std::setw(26)
           << cc_column(c) << std::setw(5) << ifc_column(c);
        if (r.metrics) {
            const auto& m = *r.metrics;
            os << std::setw(6) << m.tp << std::setw(6) << m.fp << std::setw(6) << m.fn << std::fixed
               << std::setprecision(3) << std::setw(11) << m.precision << std::setw(8) << m.recall << std::setw(7)
               << m.f1 << m.f2;
            os.unsetf(std::ios::fixed);
        } else {
            os << "error: " << r.error;
        }
        os << '\n';
    }
    return os.str();
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "model,art_class,cc,ifc,tp,fp,fn,precision,recall,f1,f2,error\n" << std::setprecision(17);
    for (const auto& r : rows) {
        const auto& c = r.config;
        os << '"' << c.model << "\"," << (c.baseline ? "n/a" : c.vocabulary) << ",\"" << cc_column(c) << "\","
           << ifc_column(c) << ',';
        if (r.metrics) {
            const auto& m = *r.metrics;
            os << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.precision << ',' << m.recall << ',' << m.f1 << ','
               << m.f2 << ",\n";
        } else {
            os << ",,,,,,,\"" << r.error << "\"\n";
        }
    }
    return os.str();
}

std::string report_json(const Manifest& manifest, const std::vector<ReportRow>& rows) {
    json out;
    const auto& t = manifest.train;
    out["settings"] = {{"thresholds", {{"polyp", manifest.options.thresholds.polyp},
                                       {"artifact", manifest.options.thresholds.artifact}}},
                       {"gt_artifacts", manifest.options.gt_artifacts},
                       {"iou_threshold", manifest.iou_threshold},
                       {"random_p", manifest.random_p},
                       {"train_config",
                        {{"hidden_width", t.hidden_width},
                         {"sample_layer1", t.sample_layer1},
                         {"sample_layer2", t.sample_layer2},
                         {"batch_size", t.batch_size},
                         {"epochs", t.epochs},
                         {"learning_rate", t.learning_rate}}}};
    out["rows"] = json::array();
    for (const auto& r : rows) {
        const auto& c = r.config;
        json row{{"model", c.model}, {"baseline", c.baseline}, {"seed", c.seed}};
        if (!c.baseline) {
            row["vocabulary"] = c.vocabulary;
            row["criteria"] = c.criteria.names();
            row["scope"] = std::string(to_string(c.scope));
            row["class_mode"] = std::string(to_string(c.class_mode));
        }
        if (r.metrics) {
            const auto& m = *r.metrics;
            row["metrics"] = {{"tp", m.tp},         {"fp", m.fp},         {"fn", m.fn}, {"precision", m.precision},
                              {"recall", m.recall}, {"f1", m.f1},         {"f2", m.f2},
                              {"precision_defined", m.precision_defined}, {"recall_defined", m.recall_defined}};
        } else {
            row["error"] = r.error;
        }
        out["rows"].push_back(std::move(row));
    }
    return out.dump(2);
}

}  // namespace boxgraph
