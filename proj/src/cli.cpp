#include "boxgraph/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "boxgraph/error.hpp"
#include "boxgraph/experiment.hpp"
#include "boxgraph/feature_cache.hpp"
#include "boxgraph/log.hpp"
#include "boxgraph/metrics.hpp"
#include "boxgraph/pipeline.hpp"
#include "boxgraph/rng.hpp"
#include "boxgraph/synthetic.hpp"

namespace boxgraph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// --config FILE: a JSON object whose keys are long flag names (dashes or
// underscores); arrays feed multi-valued options.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.name = key;
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(scalar(v, key));
            else
                item.inputs.push_back(scalar(value, key));
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    static std::string scalar(const json& v, const std::string& key) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config key '" + key + "' must be a scalar or an array of scalars");
    }
};

const char* kFooter = R"(Criteria (--criteria, comma separated):
  random      every pair independently with probability --random-p
  overlap     same frame and IoU > --iou-threshold, or one box contains the other
  same-class  identical class label
  binary      both polyps or both artifacts (excludes same-class)
Scope (--scope): dataset = any two frames may link; video = only frames of the
same video (and the same frame) may link. overlap is always within a frame.

Vocabularies (--vocab): art1 = polyp, saturation, misc, blur, contrast, bubbles,
instrument; art2 = polyp, misc, blur, bubbles; art3 = polyp, saturation, blur,
contrast, instrument; all = every label including specularity.

File formats:
  frames      JSON lines {"frame_id","video_id","image_path","width","height"};
              image_path is relative to the frames file (PNG or BMP)
  detections  JSON lines {"frame_id","class","score","source":"gt"|"det",
              "x","y","w","h"}; pixel coordinates, top-left origin
  relabeled   detections plus "detector_class","graph_class","graph_prob","polyp_prob"
  features    BGHF binary cache; graph: JSON header, node lines, "i j" edge lines
  model       BGSM binary; report: JSON + table (+ CSV)
  --config    JSON object keyed by long flag names, e.g. {"criteria":["overlap"],"seed":3}

Every output FILE is accompanied by FILE.provenance.json recording the
invocation. Exit status: 0 success, 1 usage error, 2 data error.
Logging: BOXGRAPH_LOG=error|warn|info|debug (default warn), on stderr.)";

void check_vocab(const std::string& name) {
    if (name != "art1" && name != "art2" && name != "art3" && name != "all")
        throw UsageError("unknown vocabulary '" + name + "' (expected art1, art2, art3, all)");
}

template <class F>
auto as_usage(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

struct Invocation {
    std::string command;
    std::vector<std::string> args;
    json config;  // contents of --config, or null
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

json provenance_json(const Invocation& inv) {
    return json{{"tool", "boxgraph"},
                {"version", kToolVersion},
                {"command", inv.command},
                {"arguments", inv.args},
                {"config", inv.config}};
}

void write_provenance(const fs::path& output, const Invocation& inv) {
    write_text(fs::path(output.string() + ".provenance.json"), provenance_json(inv).dump(2) + "\n");
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path image_dir(const std::string& images, const fs::path& frames) {
    return images.empty() ? frames.parent_path() : fs::path(images);
}

// ---- gen-synthetic -------------------------------------------------------

IntRange read_range(const json& j) {
    if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

void apply_scene(const json& j, SceneConfig& s) {
    for (const auto& [key, v] : j.items()) {
        if (key == "image_size") s.image_size = v.get<int>();
        else if (key == "polyps_per_frame") s.polyps_per_frame = read_range(v);
        else if (key == "artifacts_per_frame") s.artifacts_per_frame = read_range(v);
        else if (key == "artifact_class_mix") s.artifact_class_mix = v.get<std::map<std::string, double>>();
        else if (key == "polyp_size") s.polyp_size = read_range(v);
        else if (key == "artifact_size") s.artifact_size = read_range(v);
        else if (key == "pixel_noise") s.pixel_noise = v.get<double>();
        else if (key == "frames_per_video") s.frames_per_video = v.get<int>();
        else if (key == "video_count") s.video_count = v.get<int>();
        else if (key == "first_video") s.first_video = v.get<int>();
        else if (key == "id_prefix") s.id_prefix = v.get<std::string>();
        else throw DataError("unknown scene setting '" + key + "'");
    }
}

ScoreRange read_score_range(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

void apply_detector(const json& j, DetectorNoiseConfig& d) {
    for (const auto& [key, v] : j.items()) {
        if (key == "localization_jitter") d.localization_jitter = v.get<double>();
        else if (key == "miss_rate") d.miss_rate = v.get<std::map<std::string, double>>();
        else if (key == "default_miss_rate") d.default_miss_rate = v.get<double>();
        else if (key == "spurious_rate") d.spurious_rate = v.get<double>();
        else if (key == "confusion") d.confusion = v.get<std::map<std::string, std::map<std::string, double>>>();
        else if (key == "matched_score") d.matched_score = read_score_range(v);
        else if (key == "spurious_score") d.spurious_score = read_score_range(v);
        else throw DataError("unknown detector setting '" + key + "'");
    }
}

struct GenOptions {
    std::string scene_file;
    std::uint64_t seed = 0;
    std::string out;
    int videos = -1;
    int frames_per_video = -1;
    int first_video = -1;
    std::string prefix;
    bool no_detector = false;
};

int run_gen(const GenOptions& o, const Invocation& inv, std::ostream& out) {
    SceneConfig scene;
    DetectorNoiseConfig detector;
    if (!o.scene_file.empty()) {
        std::ifstream in(o.scene_file);
        if (!in) throw DataError("cannot open " + o.scene_file);
        try {
            const json j = json::parse(in);
            for (const auto& [key, v] : j.items()) {
                if (key == "scene") apply_scene(v, scene);
                else if (key == "detector") apply_detector(v, detector);
                else throw DataError("unknown section '" + key + "' (expected scene, detector)");
            }
        } catch (const json::exception& e) {
            throw DataError(o.scene_file + ": " + e.what());
        }
    }
    if (o.videos >= 0) scene.video_count = o.videos;
    if (o.frames_per_video >= 0) scene.frames_per_video = o.frames_per_video;
    if (o.first_video >= 0) scene.first_video = o.first_video;
    if (!o.prefix.empty()) scene.id_prefix = o.prefix;
    scene.rng_seed = o.seed;
    detector.rng_seed = derive_seed({o.seed, 0xd37});
    as_usage([&] {
        scene.validate();
        detector.validate();
        return 0;
    });

    const SyntheticDataset data = generate_dataset(scene);
    const fs::path dir(o.out);
    write_synthetic(data, dir);
    std::size_t det_rows = 0;
    if (!o.no_detector) {
        const auto det = simulate_detector(data.frames, data.ground_truth, detector);
        write_detections(dir / "det.jsonl", det);
        det_rows = det.size();
    }
    write_text(dir / "provenance.json", provenance_json(inv).dump(2) + "\n");
    out << "wrote " << data.frames.size() << " frames, " << data.ground_truth.size() << " ground-truth boxes, "
        << det_rows << " detections to " << dir.string() << "\n";
    return 0;
}

// ---- shared detection-set options ------------------------------------------

struct DetectionSetOptions {
    std::string frames;
    std::vector<std::string> detections;
    std::string images;
    std::string vocab = "all";
    double polyp_threshold = kPolypScoreThreshold;
    double artifact_threshold = kArtifactScoreThreshold;
    std::size_t threads = 1;

    void add(CLI::App* app) {
        app->add_option("--frames", frames, "frames file (JSON lines)")->required();
        app->add_option("--detections", detections, "detections file(s), merged in order")->required();
        app->add_option("--images", images, "image directory (default: the frames file's directory)");
        app->add_option("--vocab", vocab, "art1 | art2 | art3 | all")->capture_default_str();
        app->add_option("--polyp-threshold", polyp_threshold, "minimum polyp score")->capture_default_str();
        app->add_option("--artifact-threshold", artifact_threshold, "minimum artifact score")
            ->capture_default_str();
        app->add_option("--threads", threads, "feature extraction workers")->capture_default_str()->check(
            CLI::PositiveNumber);
    }

    Dataset load(const ClassVocabulary& vocab_set) const {
        std::vector<fs::path> files(detections.begin(), detections.end());
        Dataset d = load_dataset(frames, files);
        for (const auto& w : d.warnings) log::warn(w);
        return prepare_detections(d, vocab_set, polyp_threshold, artifact_threshold);
    }
};

int run_extract(const DetectionSetOptions& d, const std::string& out_path, const Invocation& inv,
                std::ostream& out) {
    check_vocab(d.vocab);
    const auto vocab = vocabulary_by_name(d.vocab);
    const Dataset data = d.load(vocab);
    FeatureCache cache;
    cache.dim = static_cast<std::uint32_t>(HogConfig{}.descriptor_length());
    cache.features = compute_features(data, disk_images(image_dir(d.images, d.frames)), HogConfig{}, d.threads);
    for (std::size_t i = 0; i < cache.features.size(); ++i) cache.ids.push_back(std::to_string(i));
    ensure_parent(out_path);
    write_feature_cache(out_path, cache);
    write_provenance(out_path, inv);
    out << "wrote " << cache.ids.size() << " feature vectors of length " << cache.dim << " to " << out_path << "\n";
    return 0;
}

// ---- build-graph -------------------------------------------------------------

struct GraphOptions {
    std::vector<std::string> criteria;
    std::string scope = "dataset";
    double iou_threshold = 0.5;
    double random_p = 0.5;
    std::uint64_t seed = 0;

    void add(CLI::App* app, bool required) {
        auto* c = app->add_option("--criteria", criteria, "random, overlap, same-class, binary")->delimiter(',');
        if (required) c->required();
        app->add_option("--scope", scope, "dataset | video")->capture_default_str();
        app->add_option("--iou-threshold", iou_threshold, "overlap IoU threshold")->capture_default_str();
        app->add_option("--random-p", random_p, "random edge probability")->capture_default_str();
        app->add_option("--seed", seed, "root of every random stream")->capture_default_str();
    }

    GraphConfig config() const {
        return as_usage([&] {
            GraphConfig g;
            g.criteria = CriteriaSet::from_names(criteria);
            g.scope = parse_scope(scope);
            g.iou_threshold = iou_threshold;
            g.random_p = random_p;
            g.rng_seed = seed;
            g.validate();
            return g;
        });
    }
};

int run_build_graph(const DetectionSetOptions& d, const GraphOptions& g, const std::string& features,
                    const std::string& out_path, const Invocation& inv, std::ostream& out) {
    check_vocab(d.vocab);
    const GraphConfig cfg = g.config();
    const auto vocab = vocabulary_by_name(d.vocab);
    const Dataset data = d.load(vocab);
    std::vector<std::vector<float>> feats;
    if (!features.empty()) {
        FeatureCache cache = read_feature_cache(features);
        if (cache.ids.size() != data.detection_count())
            throw DataError("feature cache " + features + " has " + std::to_string(cache.ids.size()) +
                            " vectors, the detection set has " + std::to_string(data.detection_count()));
        for (std::size_t i = 0; i < cache.ids.size(); ++i)
            if (cache.ids[i] != std::to_string(i))
                throw DataError("feature cache " + features + " is not in node order at record " +
                                std::to_string(i));
        feats = std::move(cache.features);
    } else {
        feats = compute_features(data, disk_images(image_dir(d.images, d.frames)), HogConfig{}, d.threads);
    }
    const BoxGraph graph = build_graph(build_nodes(data, vocab, std::move(feats)), cfg, vocab);
    ensure_parent(out_path);
    write_graph(out_path, graph);
    write_provenance(out_path, inv);
    const DegreeStats s = degree_stats(graph);
    out << "nodes " << graph.node_count() << " edges " << s.edges << " degree min " << s.min_degree << " mean "
        << s.mean_degree << " max " << s.max_degree << " isolated " << s.isolated << "\n";
    return 0;
}

// ---- train ---------------------------------------------------------------------

struct TrainOptions {
    std::string frames;
    std::string gt;
    std::string artifacts;
    std::string images;
    std::string vocab = "art1";
    std::string class_mode = "multiclass";
    bool gt_artifacts = false;
    double polyp_threshold = kPolypScoreThreshold;
    double artifact_threshold = kArtifactScoreThreshold;
    std::size_t threads = 1;
    TrainConfig train;
    std::string out;
    std::string trace;
};

void add_train_config(CLI::App* app, TrainConfig& t) {
    app->add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
    app->add_option("--hidden-width", t.hidden_width, "hidden units per layer")->capture_default_str();
    app->add_option("--sample1", t.sample_layer1, "neighbors sampled for the first aggregation")
        ->capture_default_str();
    app->add_option("--sample2", t.sample_layer2, "neighbors sampled for the second aggregation")
        ->capture_default_str();
    app->add_option("--batch-size", t.batch_size, "target nodes per minibatch")->capture_default_str();
    app->add_option("--learning-rate", t.learning_rate, "SGD step size")->capture_default_str();
}

int run_train(const TrainOptions& o, const GraphOptions& g, const Invocation& inv, std::ostream& out) {
    check_vocab(o.vocab);
    const GraphConfig gcfg = g.config();
    TrainConfig tcfg = o.train;
    tcfg.rng_seed = g.seed;
    tcfg.class_mode = as_usage([&] { return parse_class_mode(o.class_mode); });
    as_usage([&] {
        tcfg.validate();
        return 0;
    });
    if (o.artifacts.empty() && !o.gt_artifacts) throw UsageError("--artifacts is required without --gt-artifacts");

    TrainInputs inputs;
    inputs.frames = read_frames(o.frames);
    inputs.ground_truth = read_detections(o.gt);
    if (!o.artifacts.empty()) inputs.artifact_detections = read_detections(o.artifacts);
    PipelineOptions opts;
    opts.thresholds = {o.polyp_threshold, o.artifact_threshold};
    opts.gt_artifacts = o.gt_artifacts;
    opts.threads = o.threads;
    TrainResult result = train_pipeline(inputs, vocabulary_by_name(o.vocab), gcfg, tcfg,
                                        disk_images(image_dir(o.images, o.frames)), opts);
    json prov = json::parse(result.model.provenance);
    prov["invocation"] = provenance_json(inv);
    result.model.provenance = prov.dump();

    ensure_parent(o.out);
    write_model(o.out, result.model);
    write_provenance(o.out, inv);
    if (!o.trace.empty()) {
        ensure_parent(o.trace);
        write_loss_trace(o.trace, result.trace);
        write_provenance(o.trace, inv);
    }
    const auto& last = result.trace.back();
    out << "trained " << result.trace.size() << " epochs; final loss " << last.mean_loss << " train accuracy "
        << last.train_accuracy << "\n";
    return 0;
}

// ---- infer -----------------------------------------------------------------------

struct InferOptions {
    std::string model;
    std::string frames;
    std::string polyps;
    std::string artifacts;
    std::string images;
    double polyp_threshold = kPolypScoreThreshold;
    double artifact_threshold = kArtifactScoreThreshold;
    std::size_t threads = 1;
    std::string out;
    std::string polyp_out;
};

// Graph flags given on the infer command line; the rest come from the model.
struct GraphOverrides {
    bool criteria = false, scope = false, iou = false, random_p = false, seed = false;
    bool any() const { return criteria || scope || iou || random_p || seed; }
};

int run_infer(const InferOptions& o, const GraphOptions& g, const GraphOverrides& given, const Invocation& inv,
              std::ostream& out) {
    const SageModel model = read_model(o.model);
    std::optional<GraphConfig> gcfg;
    if (given.any()) {
        GraphConfig c = model.graph_config;
        if (given.criteria) c.criteria = as_usage([&] { return CriteriaSet::from_names(g.criteria); });
        if (given.scope) c.scope = as_usage([&] { return parse_scope(g.scope); });
        if (given.iou) c.iou_threshold = g.iou_threshold;
        if (given.random_p) c.random_p = g.random_p;
        if (given.seed) c.rng_seed = g.seed;
        as_usage([&] {
            c.validate();
            return 0;
        });
        gcfg = c;
    }
    InferInputs inputs;
    inputs.frames = read_frames(o.frames);
    inputs.polyp_detections = read_detections(o.polyps);
    inputs.artifact_detections = o.artifacts.empty() ? inputs.polyp_detections : read_detections(o.artifacts);
    PipelineOptions opts;
    opts.thresholds = {o.polyp_threshold, o.artifact_threshold};
    opts.threads = o.threads;
    const InferenceResult r =
        infer_pipeline(model, inputs, disk_images(image_dir(o.images, o.frames)), gcfg, opts);
    for (const auto& w : r.warnings) log::warn(w);

    ensure_parent(o.out);
    write_relabeled(o.out, r.relabeled);
    write_provenance(o.out, inv);
    if (!o.polyp_out.empty()) {
        ensure_parent(o.polyp_out);
        write_detections(o.polyp_out, r.polyp_set);
        write_provenance(o.polyp_out, inv);
    }
    out << "relabeled " << r.relabeled.size() << " detections; " << r.polyp_set.size() << " kept as polyp\n";
    return 0;
}

// ---- eval ------------------------------------------------------------------------

bool is_relabeled_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            return j.is_object() && j.contains("graph_class");
        } catch (const json::exception&) {
            return false;  // let the detections reader report it
        }
    }
    return false;
}

std::vector<FrameDetection> prediction_rows(const fs::path& path) {
    if (!is_relabeled_file(path)) return read_detections(path);
    std::vector<FrameDetection> rows;
    for (const auto& r : read_relabeled(path)) {
        if (r.graph_class != kPolypLabel) continue;
        FrameDetection fd;
        fd.frame_id = r.frame_id;
        fd.detection = r.detection;
        fd.detection.class_label = kPolypLabel;
        rows.push_back(std::move(fd));
    }
    return rows;
}

int run_eval(const std::string& pred, const std::string& gt, double min_score, const std::string& csv,
             const std::string& out_path, const Invocation& inv, std::ostream& out) {
    auto predicted = prediction_rows(pred);
    std::erase_if(predicted, [&](const FrameDetection& r) {
        return r.detection.source == Source::detector && r.detection.score < min_score;
    });
    const auto truth = read_detections(gt);
    const DetectionMetrics m = evaluate_polyps(predicted, truth);
    out << metrics_json(m) << "\n" << metrics_table(m);
    if (!csv.empty()) {
        ensure_parent(csv);
        write_text(csv, metrics_csv(m));
        write_provenance(csv, inv);
    }
    if (!out_path.empty()) {
        ensure_parent(out_path);
        write_text(out_path, metrics_json(m) + "\n");
        write_provenance(out_path, inv);
    }
    return 0;
}

// ---- run-experiment ----------------------------------------------------------------

int run_experiment_cmd(const std::string& manifest_file, std::size_t threads, const std::string& out_path,
                       const std::string& csv, const Invocation& inv, std::ostream& out) {
    Manifest m = read_manifest(manifest_file);
    m.options.threads = threads;
    const auto rows = run_experiment(m, load_experiment_data(m));
    out << report_table(rows);
    if (!out_path.empty()) {
        ensure_parent(out_path);
        json report = json::parse(report_json(m, rows));
        report["provenance"] = provenance_json(inv);
        write_text(out_path, report.dump(2) + "\n");
        write_provenance(out_path, inv);
    }
    if (!csv.empty()) {
        ensure_parent(csv);
        write_text(csv, report_csv(rows));
        write_provenance(csv, inv);
    }
    return 0;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
    return std::any_of(args.begin() + 1, args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Splices the subcommand's --config file into the argument list as ordinary
// flags; flags given on the command line take precedence over the file.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args, json& config) {
    if (args.empty()) return args;
    CLI::App* sub = app.get_subcommand_no_throw(args.front());
    if (sub == nullptr) return args;
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || !fs::is_regular_file(path)) return args;  // left to the option's own check

    std::ifstream in(path);
    const auto items = JsonConfig().from_config(in);
    in.clear();
    in.seekg(0);
    config = json::parse(in);

    std::vector<std::string> expanded{args.front()};
    for (const auto& item : items) {
        const std::string flag = "--" + item.name;
        if (item.name == "config" || sub->get_option_no_throw(flag) == nullptr)
            throw CLI::ConversionError("config file key '" + item.name + "' is not a flag of " + sub->get_name());
        if (given_on_command_line(args, flag)) continue;
        for (const auto& v : item.inputs) expanded.push_back(flag + "=" + v);
    }
    expanded.insert(expanded.end(), args.begin() + 1, args.end());
    return expanded;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    log::init_from_env();

    CLI::App app{"boxgraph: graph-based re-classification of polyp and artifact detections", "boxgraph"};
    app.require_subcommand(1, 1);
    app.footer(kFooter);
    app.set_version_flag("--version", kToolVersion);

    auto with_config = [](CLI::App* sub) {
        sub->add_option("--config", "JSON file whose keys mirror the long flags")->check(CLI::ExistingFile);
    };

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "generate a synthetic scene dataset with detector output");
    with_config(gen_cmd);
    gen_cmd->add_option("--scene", gen.scene_file,
                        "JSON with optional \"scene\" and \"detector\" sections (generator settings)");
    gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--videos", gen.videos, "number of videos");
    gen_cmd->add_option("--frames-per-video", gen.frames_per_video, "frames per video");
    gen_cmd->add_option("--first-video", gen.first_video, "index of the first video");
    gen_cmd->add_option("--prefix", gen.prefix, "frame id prefix");
    gen_cmd->add_flag("--no-detector", gen.no_detector, "skip det.jsonl");

    DetectionSetOptions ext;
    std::string ext_out;
    auto* ext_cmd = app.add_subcommand("extract-features", "compute HOG descriptors for a detection set");
    with_config(ext_cmd);
    ext.add(ext_cmd);
    ext_cmd->add_option("--out", ext_out, "feature cache file")->required();

    DetectionSetOptions bg;
    GraphOptions bg_graph;
    std::string bg_features;
    std::string bg_out;
    auto* bg_cmd = app.add_subcommand("build-graph", "build a graph over a detection set");
    with_config(bg_cmd);
    bg.add(bg_cmd);
    bg_graph.add(bg_cmd, true);
    bg_cmd->add_option("--features", bg_features, "feature cache from extract-features (default: compute)");
    bg_cmd->add_option("--out", bg_out, "graph file")->required();

    TrainOptions tr;
    GraphOptions tr_graph;
    auto* tr_cmd = app.add_subcommand("train", "train the node classifier on a labeled graph");
    with_config(tr_cmd);
    tr_cmd->add_option("--frames", tr.frames, "frames file")->required();
    tr_cmd->add_option("--gt", tr.gt, "ground-truth file")->required();
    tr_cmd->add_option("--artifacts", tr.artifacts, "artifact detections file");
    tr_cmd->add_option("--images", tr.images, "image directory (default: the frames file's directory)");
    tr_cmd->add_option("--vocab", tr.vocab, "art1 | art2 | art3 | all")->capture_default_str();
    tr_cmd->add_option("--class-mode", tr.class_mode, "multiclass | binary")->capture_default_str();
    tr_cmd->add_flag("--gt-artifacts", tr.gt_artifacts, "train on ground-truth artifact boxes");
    tr_cmd->add_option("--polyp-threshold", tr.polyp_threshold, "minimum polyp score")->capture_default_str();
    tr_cmd->add_option("--artifact-threshold", tr.artifact_threshold, "minimum artifact score")
        ->capture_default_str();
    tr_cmd->add_option("--threads", tr.threads, "feature extraction workers")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    add_train_config(tr_cmd, tr.train);
    tr_graph.add(tr_cmd, true);
    tr_cmd->add_option("--out", tr.out, "model file")->required();
    tr_cmd->add_option("--trace", tr.trace, "per-epoch loss CSV");

    InferOptions inf;
    GraphOptions inf_graph;
    auto* inf_cmd = app.add_subcommand("infer", "re-classify detections on unseen data");
    with_config(inf_cmd);
    inf_cmd->add_option("--model", inf.model, "model file")->required();
    inf_cmd->add_option("--frames", inf.frames, "frames file")->required();
    inf_cmd->add_option("--polyps", inf.polyps, "polyp detections file")->required();
    inf_cmd->add_option("--artifacts", inf.artifacts, "artifact detections file (default: --polyps)");
    inf_cmd->add_option("--images", inf.images, "image directory (default: the frames file's directory)");
    inf_cmd->add_option("--polyp-threshold", inf.polyp_threshold, "minimum polyp score")->capture_default_str();
    inf_cmd->add_option("--artifact-threshold", inf.artifact_threshold, "minimum artifact score")
        ->capture_default_str();
    inf_cmd->add_option("--threads", inf.threads, "feature extraction workers")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    inf_graph.add(inf_cmd, false);
    inf_cmd->add_option("--out", inf.out, "relabeled detections file")->required();
    inf_cmd->add_option("--polyp-out", inf.polyp_out, "final polyp set (detections format)");

    std::string ev_pred, ev_gt, ev_csv, ev_out;
    double ev_min_score = 0.0;
    auto* ev_cmd = app.add_subcommand("eval", "score polyp predictions (center-in-box)");
    with_config(ev_cmd);
    ev_cmd->add_option("--pred", ev_pred, "predictions: detections or relabeled file")->required();
    ev_cmd->add_option("--gt", ev_gt, "ground-truth file")->required();
    ev_cmd->add_option("--polyp-threshold", ev_min_score, "ignore detector rows scoring below this")
        ->capture_default_str();
    ev_cmd->add_option("--csv", ev_csv, "also write the metrics as CSV");
    ev_cmd->add_option("--out", ev_out, "also write the metrics JSON to a file");

    std::string ex_manifest, ex_out, ex_csv;
    std::size_t ex_threads = 1;
    auto* ex_cmd = app.add_subcommand("run-experiment", "train, infer and score every configuration of a manifest");
    with_config(ex_cmd);
    ex_cmd->add_option("--manifest", ex_manifest, "experiment manifest (JSON)")->required();
    ex_cmd->add_option("--threads", ex_threads, "feature extraction workers")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ex_cmd->add_option("--out", ex_out, "report JSON");
    ex_cmd->add_option("--csv", ex_csv, "report CSV");

    json config;
    try {
        const auto expanded = expand_config(app, args, config);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    Invocation inv;
    inv.command = sub->get_name();
    inv.args = args;
    inv.config = config;
    log::info("boxgraph " + inv.command);
    for (const auto& a : args) log::debug("argument: " + a);

    try {
        if (sub == gen_cmd) return run_gen(gen, inv, out);
        if (sub == ext_cmd) return run_extract(ext, ext_out, inv, out);
        if (sub == bg_cmd) return run_build_graph(bg, bg_graph, bg_features, bg_out, inv, out);
        if (sub == tr_cmd) return run_train(tr, tr_graph, inv, out);
        if (sub == inf_cmd) {
            GraphOverrides given;
            given.criteria = inf_cmd->count("--criteria") > 0;
            given.scope = inf_cmd->count("--scope") > 0;
            given.iou = inf_cmd->count("--iou-threshold") > 0;
            given.random_p = inf_cmd->count("--random-p") > 0;
            given.seed = inf_cmd->count("--seed") > 0;
            return run_infer(inf, inf_graph, given, inv, out);
        }
        if (sub == ev_cmd) return run_eval(ev_pred, ev_gt, ev_min_score, ev_csv, ev_out, inv, out);
        if (sub == ex_cmd) return run_experiment_cmd(ex_manifest, ex_threads, ex_out, ex_csv, inv, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace boxgraph
