#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <functional>
#include <random>
#include <stdexcept>

#include "boxgraph/dataset_io.hpp"
#include "boxgraph/error.hpp"
#include "temp_dir.hpp"

using namespace boxgraph;
using testing_support::TempDir;

namespace {

const char* kFrames =
    R"({"frame_id":"f1","video_id":"v1","image_path":"images/f1.png","width":100,"height":80}
{"frame_id":"f2","video_id":"v1","image_path":"images/f2.png","width":100,"height":80}
)";

Detection det(const std::string& label, double score, Source source = Source::detector) {
    Detection d;
    d.bbox = {10, 10, 20, 20};
    d.class_label = label;
    d.score = score;
    d.source = source;
    return d;
}

std::string what_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("two well-formed frames") {
    TempDir dir;
    const auto frames = dir.write("frames.jsonl", kFrames);
    const auto dets = dir.write("det.jsonl",
                                R"({"frame_id":"f1","class":"polyp","score":0.9,"source":"det","x":1,"y":2,"w":30,"h":20}
{"frame_id":"f2","class":"bubbles","score":0.7,"source":"det","x":5,"y":5,"w":10,"h":10}

{"frame_id":"f1","class":"blur","source":"gt","x":50,"y":40,"w":20,"h":20}
)");
    const Dataset ds = load_dataset(frames, dets);
    REQUIRE(ds.frames.size() == 2);
    REQUIRE(ds.detections[0].size() == 2);
    REQUIRE(ds.detections[1].size() == 1);
    CHECK(ds.detections[0][0].class_label == "polyp");
    CHECK(ds.detections[0][0].bbox == BoundingBox{1, 2, 30, 20});
    CHECK(ds.detections[0][1].score == 1.0);
    CHECK(ds.detections[0][1].source == Source::ground_truth);
    CHECK(ds.detections[1][0].class_label == "bubbles");
    CHECK(ds.warnings.empty());
}

TEST_CASE("unknown frame id is reported with its line") {
    TempDir dir;
    const auto frames = dir.write("frames.jsonl", kFrames);
    const auto dets = dir.write("det.jsonl",
                                R"({"frame_id":"f1","class":"polyp","score":0.9,"source":"det","x":1,"y":2,"w":30,"h":20}
{"frame_id":"f999","class":"polyp","score":0.9,"source":"det","x":1,"y":2,"w":30,"h":20}
)");
    CHECK_THROWS_AS(load_dataset(frames, dets), DataError);
    const std::string msg = what_of([&] { load_dataset(frames, dets); });
    CHECK(msg.find("f999") != std::string::npos);
    CHECK(msg.find(":2") != std::string::npos);
}

TEST_CASE("malformed rows are data errors") {
    TempDir dir;
    const auto frames = dir.write("frames.jsonl", kFrames);
    const auto unknown = dir.write("a.jsonl", R"({"frame_id":"f1","class":"smoke","score":0.9,"source":"det","x":1,"y":2,"w":3,"h":4})");
    CHECK(what_of([&] { load_dataset(frames, unknown); }).find("smoke") != std::string::npos);
    const auto score = dir.write("b.jsonl", R"({"frame_id":"f1","class":"polyp","score":1.5,"source":"det","x":1,"y":2,"w":3,"h":4})");
    CHECK_THROWS_AS(load_dataset(frames, score), DataError);
    const auto flat = dir.write("c.jsonl", R"({"frame_id":"f1","class":"polyp","score":0.5,"source":"det","x":1,"y":2,"w":0,"h":4})");
    CHECK_THROWS_AS(load_dataset(frames, flat), DataError);
    const auto broken = dir.write("d.jsonl", "{\"frame_id\":\n");
    CHECK_THROWS_AS(load_dataset(frames, broken), DataError);
    const auto outside = dir.write("e.jsonl", R"({"frame_id":"f1","class":"polyp","score":0.5,"source":"det","x":500,"y":2,"w":5,"h":4})");
    CHECK_THROWS_AS(load_dataset(frames, outside), DataError);
    const auto dup = dir.write("frames_dup.jsonl", std::string(kFrames) + R"({"frame_id":"f1","video_id":"v2","image_path":"x.png","width":10,"height":10})" + "\n");
    CHECK_THROWS_AS(read_frames(dup), DataError);
    CHECK_THROWS_AS(read_frames(dir / "missing.jsonl"), DataError);
}

TEST_CASE("boxes past the frame edge are clipped with a warning") {
    TempDir dir;
    const auto frames = dir.write("frames.jsonl", kFrames);
    const auto dets = dir.write("det.jsonl",
                                R"({"frame_id":"f2","class":"polyp","score":0.9,"source":"det","x":90,"y":-5,"w":30,"h":20}
)");
    const Dataset ds = load_dataset(frames, dets);
    CHECK(ds.detections[1][0].bbox == BoundingBox{90, 0, 10, 15});
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("clipped") != std::string::npos);
}

TEST_CASE("artifact vocabularies") {
    const auto art1 = select_artifact_set(ArtifactSet::art1);
    CHECK(art1.labels() ==
          std::vector<std::string>{"polyp", "saturation", "misc", "blur", "contrast", "bubbles", "instrument"});
    CHECK(select_artifact_set(ArtifactSet::art2).labels() ==
          std::vector<std::string>{"polyp", "misc", "blur", "bubbles"});
    CHECK(select_artifact_set(ArtifactSet::art3).labels() ==
          std::vector<std::string>{"polyp", "saturation", "blur", "contrast", "instrument"});
    CHECK(art1.excluded_artifacts() == std::set<std::string>{"specularity"});
    CHECK(vocabulary_by_name("all").size() == 8);
    CHECK_THROWS_AS(vocabulary_by_name("art9"), std::invalid_argument);
    CHECK_THROWS_AS(ClassVocabulary({"blur", "misc"}), std::invalid_argument);
    CHECK(ClassVocabulary({"blur", "polyp"}).label(0) == "polyp");
}

TEST_CASE("filter_by_score thresholds") {
    const std::vector<Detection> in{det("polyp", 0.30), det("bubbles", 0.30), det("blur", 0.5), det("polyp", 0.2),
                                    det("misc", 0.1, Source::ground_truth)};
    const auto out = filter_by_score(in);
    REQUIRE(out.size() == 3);
    CHECK(out[0].class_label == "polyp");
    CHECK(out[1].class_label == "blur");
    CHECK(out[2].source == Source::ground_truth);
    CHECK(filter_by_score(std::vector<Detection>{}).empty());
    CHECK_THROWS_AS(filter_by_score(in, 1.5, 0.5), std::invalid_argument);
}

TEST_CASE("filter_by_score is idempotent and monotone") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    const std::vector<std::string> labels{"polyp", "blur", "bubbles", "misc"};
    std::vector<Detection> in;
    for (int i = 0; i < 300; ++i) in.push_back(det(labels[static_cast<std::size_t>(i) % labels.size()], u(rng)));
    const auto once = filter_by_score(in);
    CHECK(filter_by_score(once) == once);
    const auto stricter = filter_by_score(in, 0.4, 0.7);
    CHECK(stricter.size() <= once.size());
    for (const auto& d : stricter) CHECK(std::find(once.begin(), once.end(), d) != once.end());
}

TEST_CASE("drop_classes") {
    const std::vector<Detection> in{det("polyp", 0.9), det("specularity", 0.9), det("blur", 0.9)};
    const auto out = drop_classes(in, {"specularity"});
    REQUIRE(out.size() == 2);
    CHECK(out[1].class_label == "blur");
    CHECK(drop_classes(in, {}) == in);
    CHECK_THROWS_AS(drop_classes(in, {"polyp"}), std::invalid_argument);
}

TEST_CASE("save then load is an identity") {
    TempDir dir;
    std::vector<FrameRecord> frames{{"a", "v", "a.png", 64, 48}, {"b", "v", "b.png", 64, 48}};
    std::vector<FrameDetection> rows;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> pos(0, 30), size(0.5, 17.3), score(0, 1);
    for (int i = 0; i < 40; ++i) {
        FrameDetection r;
        r.frame_id = i % 3 == 0 ? "b" : "a";
        r.detection = det(i % 2 ? "polyp" : "instrument", score(rng));
        r.detection.bbox = {pos(rng), pos(rng), size(rng), size(rng)};
        rows.push_back(r);
    }
    const Dataset original = assemble_dataset(frames, rows);
    save_dataset(original, dir / "frames.jsonl", dir / "det.jsonl");
    const Dataset again = load_dataset(dir / "frames.jsonl", dir / "det.jsonl");
    CHECK(again.same_content(original));
}

TEST_CASE("prepare_detections drops artifacts outside the vocabulary") {
    std::vector<FrameRecord> frames{{"a", "v", "a.png", 64, 48}};
    std::vector<FrameDetection> rows{{"a", det("polyp", 0.9), 0},
                                     {"a", det("specularity", 0.9), 0},
                                     {"a", det("bubbles", 0.9), 0},
                                     {"a", det("bubbles", 0.2), 0}};
    const Dataset ds = prepare_detections(assemble_dataset(frames, rows), select_artifact_set(ArtifactSet::art3));
    REQUIRE(ds.detections[0].size() == 1);
    CHECK(ds.detections[0][0].class_label == "polyp");
}
