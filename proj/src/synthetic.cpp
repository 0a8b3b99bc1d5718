#include "boxgraph/synthetic.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "boxgraph/error.hpp"
#include "boxgraph/rng.hpp"

namespace boxgraph {

void SceneConfig::validate() const {
    auto check_range = [](IntRange r, const char* name, int lo) {
        if (r.min < lo || r.max < r.min) throw std::invalid_argument(std::string("invalid range for ") + name);
    };
    check_range(polyps_per_frame, "polyps_per_frame", 0);
    check_range(artifacts_per_frame, "artifacts_per_frame", 0);
    check_range(polyp_size, "polyp_size", 4);
    check_range(artifact_size, "artifact_size", 4);
    if (image_size < 8) throw std::invalid_argument("image_size must be >= 8");
    if (frames_per_video < 0 || video_count < 0 || first_video < 0)
        throw std::invalid_argument("frame and video counts must be >= 0");
    if (!(pixel_noise >= 0.0)) throw std::invalid_argument("pixel_noise must be >= 0");
    if (!artifact_class_mix.empty()) {
        double total = 0.0;
        for (const auto& [label, p] : artifact_class_mix) {
            if (!is_artifact_label(label)) throw std::invalid_argument("class mix names non-artifact '" + label + "'");
            if (!(p >= 0.0)) throw std::invalid_argument("class mix probabilities must be >= 0");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("artifact_class_mix must sum to 1");
    }
}

std::vector<std::pair<std::string, double>> SceneConfig::resolved_mix() const {
    std::vector<std::pair<std::string, double>> out;
    const auto& labels = artifact_labels();
    for (const auto& l : labels) {
        double p = 1.0 / static_cast<double>(labels.size());
        if (!artifact_class_mix.empty()) {
            const auto it = artifact_class_mix.find(l);
            p = it == artifact_class_mix.end() ? 0.0 : it->second;
        }
        out.emplace_back(l, p);
    }
    return out;
}

DetectorNoiseConfig DetectorNoiseConfig::identity() {
    DetectorNoiseConfig c;
    c.localization_jitter = 0.0;
    c.default_miss_rate = 0.0;
    c.spurious_rate = 0.0;
    c.matched_score = {0.99, 1.0};
    return c;
}

void DetectorNoiseConfig::validate() const {
    auto rate = [](double r, const std::string& what) {
        if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument(what + " must be in [0,1]");
    };
    rate(default_miss_rate, "default_miss_rate");
    for (const auto& [label, r] : miss_rate) {
        if (!is_known_label(label)) throw std::invalid_argument("miss_rate names unknown label '" + label + "'");
        rate(r, "miss_rate[" + label + "]");
    }
    if (!(localization_jitter >= 0.0)) throw std::invalid_argument("localization_jitter must be >= 0");
    if (!(spurious_rate >= 0.0)) throw std::invalid_argument("spurious_rate must be >= 0");
    for (const auto& [row, cols] : confusion) {
        if (!is_known_label(row)) throw std::invalid_argument("confusion row names unknown label '" + row + "'");
        double total = 0.0;
        for (const auto& [col, p] : cols) {
            if (!is_known_label(col)) throw std::invalid_argument("confusion column names unknown label '" + col + "'");
            rate(p, "confusion[" + row + "][" + col + "]");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("confusion row '" + row + "' must sum to 1");
    }
    for (const ScoreRange& s : {matched_score, spurious_score}) {
        rate(s.min, "score range");
        rate(s.max, "score range");
        if (s.max < s.min) throw std::invalid_argument("score range max < min");
    }
}

double DetectorNoiseConfig::miss_for(const std::string& label) const {
    const auto it = miss_rate.find(label);
    return it == miss_rate.end() ? default_miss_rate : it->second;
}

namespace {

// Float RGB canvas in [0, 255] used while composing a frame.
struct Canvas {
    int w;
    int h;
    std::vector<double> px;

    Canvas(int width, int height) : w(width), h(height), px(static_cast<std::size_t>(width * height * 3), 0.0) {}
    double& at(int x, int y, int c) { return px[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
    void blend(int x, int y, const std::array<double, 3>& color, double alpha) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        for (int c = 0; c < 3; ++c) at(x, y, c) = (1.0 - alpha) * at(x, y, c) + alpha * color[static_cast<std::size_t>(c)];
    }
};

struct Box {
    int x, y, w, h;
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

void draw_background(Canvas& cv, Rng& rng) {
    const double fx = uniform(rng, 0.01, 0.04);
    const double fy = uniform(rng, 0.01, 0.04);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const std::array<double, 3> base{uniform(rng, 150, 185), uniform(rng, 75, 100), uniform(rng, 65, 90)};
    for (int y = 0; y < cv.h; ++y)
        for (int x = 0; x < cv.w; ++x) {
            const double shade = 18.0 * std::sin(fx * x + phase) * std::cos(fy * y + 0.5 * phase);
            for (int c = 0; c < 3; ++c) cv.at(x, y, c) = base[static_cast<std::size_t>(c)] + shade;
        }
}

void draw_polyp(Canvas& cv, const Box& b, Rng& rng) {
    const double cx = b.x + b.w / 2.0;
    const double cy = b.y + b.h / 2.0;
    const std::array<double, 3> center{uniform(rng, 215, 240), uniform(rng, 150, 180), uniform(rng, 140, 165)};
    const std::array<double, 3> edge{uniform(rng, 120, 150), uniform(rng, 45, 70), uniform(rng, 40, 60)};
    for (int y = b.y; y < b.y + b.h; ++y)
        for (int x = b.x; x < b.x + b.w; ++x) {
            const double dx = (x + 0.5 - cx) / (b.w / 2.0);
            const double dy = (y + 0.5 - cy) / (b.h / 2.0);
            const double d = dx * dx + dy * dy;
            if (d > 1.0) continue;
            const double t = std::sqrt(d);
            std::array<double, 3> col;
            for (std::size_t c = 0; c < 3; ++c) col[c] = center[c] + (edge[c] - center[c]) * t;
            cv.blend(x, y, col, 1.0);
        }
}

void draw_ring(Canvas& cv, double cx, double cy, double r, double thickness) {
    const std::array<double, 3> rim{245, 245, 250};
    const int x0 = static_cast<int>(std::floor(cx - r));
    const int y0 = static_cast<int>(std::floor(cy - r));
    const int x1 = static_cast<int>(std::ceil(cx + r));
    const int y1 = static_cast<int>(std::ceil(cy + r));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
            if (d > r) continue;
            if (d >= r - thickness) cv.blend(x, y, rim, 0.9);
            else cv.blend(x, y, rim, 0.12);
        }
}

void draw_bubbles(Canvas& cv, const Box& b, Rng& rng) {
    const double r = std::min(b.w, b.h) / 2.0;
    draw_ring(cv, b.x + b.w / 2.0, b.y + b.h / 2.0, r, std::max(1.5, r * 0.15));
    const int inner = uniform_int(rng, 0, 2);
    for (int i = 0; i < inner; ++i) {
        const double ri = r * uniform(rng, 0.2, 0.35);
        const double ang = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double off = (r - ri) * 0.6;
        draw_ring(cv, b.x + b.w / 2.0 + off * std::cos(ang), b.y + b.h / 2.0 + off * std::sin(ang), ri, 1.2);
    }
}

void draw_blur(Canvas& cv, const Box& b) {
    // Two passes of a 9x9 box filter restricted to the region.
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> copy(static_cast<std::size_t>(b.w * b.h * 3));
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x)
                for (int c = 0; c < 3; ++c) {
                    double s = 0.0;
                    int n = 0;
                    for (int dy = -4; dy <= 4; ++dy)
                        for (int dx = -4; dx <= 4; ++dx) {
                            const int xx = std::clamp(b.x + x + dx, b.x, b.x + b.w - 1);
                            const int yy = std::clamp(b.y + y + dy, b.y, b.y + b.h - 1);
                            s += cv.at(xx, yy, c);
                            ++n;
                        }
                    copy[(static_cast<std::size_t>(y) * b.w + x) * 3 + c] = s / n;
                }
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x)
                for (int c = 0; c < 3; ++c) cv.at(b.x + x, b.y + y, c) = copy[(static_cast<std::size_t>(y) * b.w + x) * 3 + c];
    }
}

void draw_saturation(Canvas& cv, const Box& b) {
    const double cx = b.x + b.w / 2.0;
    const double cy = b.y + b.h / 2.0;
    for (int y = b.y; y < b.y + b.h; ++y)
        for (int x = b.x; x < b.x + b.w; ++x) {
            const double dx = (x + 0.5 - cx) / (b.w / 2.0);
            const double dy = (y + 0.5 - cy) / (b.h / 2.0);
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d > 1.0) continue;
            cv.blend(x, y, {255, 255, 255}, d < 0.7 ? 1.0 : (1.0 - d) / 0.3);
        }
}

void draw_contrast(Canvas& cv, const Box& b, Rng& rng) {
    const double factor = uniform(rng, 0.15, 0.3);
    const double lift = uniform(rng, 25, 45);
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (int y = b.y; y < b.y + b.h; ++y)
            for (int x = b.x; x < b.x + b.w; ++x) mean += cv.at(x, y, c);
        mean /= static_cast<double>(b.w * b.h);
        for (int y = b.y; y < b.y + b.h; ++y)
            for (int x = b.x; x < b.x + b.w; ++x) cv.at(x, y, c) = mean + lift + factor * (cv.at(x, y, c) - mean);
    }
}

void draw_disc(Canvas& cv, double cx, double cy, double r, const std::array<double, 3>& col) {
    for (int y = static_cast<int>(std::floor(cy - r)); y < static_cast<int>(std::ceil(cy + r)); ++y)
        for (int x = static_cast<int>(std::floor(cx - r)); x < static_cast<int>(std::ceil(cx + r)); ++x)
            if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) cv.blend(x, y, col, 1.0);
}

void draw_misc(Canvas& cv, const Box& b, Rng& rng) {
    const std::array<double, 3> col{uniform(rng, 160, 200), uniform(rng, 170, 200), uniform(rng, 70, 110)};
    // One disc anchors each corner-facing extent so the blob touches all four box edges.
    const double r = std::min(b.w, b.h) / 4.0;
    draw_disc(cv, b.x + r, b.y + b.h / 2.0, r, col);
    draw_disc(cv, b.x + b.w - r, b.y + b.h / 2.0, r, col);
    draw_disc(cv, b.x + b.w / 2.0, b.y + r, r, col);
    draw_disc(cv, b.x + b.w / 2.0, b.y + b.h - r, r, col);
    const int extra = uniform_int(rng, 1, 3);
    for (int i = 0; i < extra; ++i)
        draw_disc(cv, uniform(rng, b.x + r, b.x + b.w - r), uniform(rng, b.y + r, b.y + b.h - r),
                  r * uniform(rng, 0.6, 1.0), col);
}

void draw_instrument(Canvas& cv, const Box& b) {
    const bool horizontal = b.w >= b.h;
    const int thickness = horizontal ? b.h : b.w;
    for (int y = b.y; y < b.y + b.h; ++y)
        for (int x = b.x; x < b.x + b.w; ++x) {
            const int across = horizontal ? y - b.y : x - b.x;
            const double t = (across + 0.5) / thickness;
            const double v = (across == 0 || across == thickness - 1) ? 60.0 : 120.0 + 100.0 * std::sin(t * std::numbers::pi);
            cv.blend(x, y, {v, v, v + 8.0}, 1.0);
        }
}

void draw_specularity(Canvas& cv, const Box& b) {
    draw_disc(cv, b.x + b.w / 2.0, b.y + b.h / 2.0, std::min(b.w, b.h) / 2.0, {255, 255, 255});
}

Box object_size(const std::string& label, const SceneConfig& cfg, Rng& rng) {
    if (label == kPolypLabel) {
        const int base = uniform_int(rng, cfg.polyp_size.min, cfg.polyp_size.max);
        const double aspect = uniform(rng, 0.8, 1.25);
        return {0, 0, std::max(4, static_cast<int>(std::lround(base * aspect))), base};
    }
    if (label == "specularity") {
        const int s = uniform_int(rng, 5, 10);
        return {0, 0, s, s};
    }
    const int base = uniform_int(rng, cfg.artifact_size.min, cfg.artifact_size.max);
    if (label == "instrument") {
        const int len = std::max(base, static_cast<int>(std::lround(base * uniform(rng, 2.5, 3.5))));
        const int thick = std::max(4, base / 2);
        return uniform_int(rng, 0, 1) == 0 ? Box{0, 0, len, thick} : Box{0, 0, thick, len};
    }
    if (label == "bubbles" || label == "misc") return {0, 0, base, base};
    const int other = std::max(4, static_cast<int>(std::lround(base * uniform(rng, 0.75, 1.33))));
    return {0, 0, other, base};
}

bool acceptable(const Box& b, const std::vector<Box>& placed) {
    for (const auto& p : placed) {
        const int iw = std::min(b.x + b.w, p.x + p.w) - std::max(b.x, p.x);
        const int ih = std::min(b.y + b.h, p.y + p.h) - std::max(b.y, p.y);
        if (iw <= 0 || ih <= 0) continue;
        if (iw * ih > 0.3 * std::min(b.w * b.h, p.w * p.h)) return false;
    }
    return true;
}

std::string pick_artifact(const std::vector<std::pair<std::string, double>>& mix, Rng& rng) {
    std::vector<double> weights;
    for (const auto& [_, p] : mix) weights.push_back(p);
    std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
    return mix[dist(rng)].first;
}

std::string zero_pad(int v, int width) {
    std::ostringstream os;
    os << std::setw(width) << std::setfill('0') << v;
    return os.str();
}

}  // namespace

SyntheticDataset generate_dataset(const SceneConfig& cfg) {
    cfg.validate();
    const auto mix = cfg.resolved_mix();
    SyntheticDataset out;
    const int size = cfg.image_size;
    for (int v = 0; v < cfg.video_count; ++v) {
        const int video = cfg.first_video + v;
        const std::string video_id = cfg.id_prefix + "_v" + zero_pad(video, 3);
        for (int f = 0; f < cfg.frames_per_video; ++f) {
            const std::string frame_id = video_id + "_f" + zero_pad(f, 4);
            Rng rng(derive_seed({cfg.rng_seed, static_cast<std::uint64_t>(video), static_cast<std::uint64_t>(f)}));
            Canvas cv(size, size);
            draw_background(cv, rng);

            std::vector<std::string> labels;
            const int polyps = uniform_int(rng, cfg.polyps_per_frame.min, cfg.polyps_per_frame.max);
            const int artifacts = uniform_int(rng, cfg.artifacts_per_frame.min, cfg.artifacts_per_frame.max);
            for (int i = 0; i < polyps; ++i) labels.emplace_back(kPolypLabel);
            for (int i = 0; i < artifacts; ++i) labels.push_back(pick_artifact(mix, rng));

            std::vector<Box> placed;
            for (const auto& label : labels) {
                Box b = object_size(label, cfg, rng);
                bool ok = false;
                for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
                    if (b.w > size || b.h > size) continue;
                    b.x = uniform_int(rng, 0, size - b.w);
                    b.y = uniform_int(rng, 0, size - b.h);
                    ok = acceptable(b, placed);
                }
                if (!ok)
                    throw DataError("image too small to place a " + label + " object in frame " + frame_id);
                placed.push_back(b);
                if (label == kPolypLabel) draw_polyp(cv, b, rng);
                else if (label == "bubbles") draw_bubbles(cv, b, rng);
                else if (label == "blur") draw_blur(cv, b);
                else if (label == "saturation") draw_saturation(cv, b);
                else if (label == "contrast") draw_contrast(cv, b, rng);
                else if (label == "misc") draw_misc(cv, b, rng);
                else if (label == "instrument") draw_instrument(cv, b);
                else draw_specularity(cv, b);

                Detection d;
                d.bbox = {static_cast<double>(b.x), static_cast<double>(b.y), static_cast<double>(b.w),
                          static_cast<double>(b.h)};
                d.class_label = label;
                d.score = 1.0;
                d.source = Source::ground_truth;
                out.ground_truth.push_back({frame_id, d, 0});
            }

            Image img(size, size, 3);
            std::normal_distribution<double> noise(0.0, cfg.pixel_noise);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    for (int c = 0; c < 3; ++c) {
                        const double v = cv.at(x, y, c) + (cfg.pixel_noise > 0.0 ? noise(rng) : 0.0);
                        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                    }
            out.frames.push_back({frame_id, video_id, "images/" + frame_id + ".png", size, size});
            out.images.push_back(std::move(img));
        }
    }
    return out;
}

void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "images");
    write_frames(dir / "frames.jsonl", data.frames);
    write_detections(dir / "gt.jsonl", data.ground_truth);
    for (std::size_t i = 0; i < data.frames.size(); ++i) write_png(dir / data.frames[i].image_path, data.images[i]);
}

std::vector<FrameDetection> simulate_detector(const std::vector<FrameRecord>& frames,
                                              const std::vector<FrameDetection>& ground_truth,
                                              const DetectorNoiseConfig& cfg) {
    cfg.validate();
    std::vector<std::string> all_labels{std::string(kPolypLabel)};
    for (const auto& a : artifact_labels()) all_labels.push_back(a);

    std::vector<std::vector<const FrameDetection*>> per_frame(frames.size());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < frames.size(); ++i) index[frames[i].frame_id] = i;
    for (const auto& g : ground_truth) {
        const auto it = index.find(g.frame_id);
        if (it == index.end()) throw DataError("ground truth references unknown frame_id \"" + g.frame_id + "\"");
        per_frame[it->second].push_back(&g);
    }

    std::vector<FrameDetection> out;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const FrameRecord& frame = frames[f];
        Rng rng(derive_seed({cfg.rng_seed, 0xde7ec7, f}));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (const FrameDetection* g : per_frame[f]) {
            const Detection& truth = g->detection;
            const double miss_draw = unit(rng);
            if (miss_draw < cfg.miss_for(truth.class_label)) continue;
            BoundingBox b = truth.bbox;
            if (cfg.localization_jitter > 0.0) {
                const double sx = cfg.localization_jitter * b.width;
                const double sy = cfg.localization_jitter * b.height;
                const double x0 = b.x_min + sx * gauss(rng);
                const double y0 = b.y_min + sy * gauss(rng);
                const double x1 = b.x_max() + sx * gauss(rng);
                const double y1 = b.y_max() + sy * gauss(rng);
                BoundingBox j{std::min(x0, x1), std::min(y0, y1), std::max(std::abs(x1 - x0), 1.0),
                              std::max(std::abs(y1 - y0), 1.0)};
                if (clip_to_frame(j, frame.width, frame.height)) b = j;
            }
            std::string label = truth.class_label;
            const auto row = cfg.confusion.find(truth.class_label);
            const double confusion_draw = unit(rng);
            if (row != cfg.confusion.end()) {
                double acc = 0.0;
                for (const auto& [col, p] : row->second) {
                    acc += p;
                    if (confusion_draw < acc) {
                        label = col;
                        break;
                    }
                }
            }
            Detection d;
            d.bbox = b;
            d.class_label = label;
            d.score = std::uniform_real_distribution<double>(cfg.matched_score.min, cfg.matched_score.max)(rng);
            d.source = Source::detector;
            out.push_back({frame.frame_id, d, 0});
        }
        if (cfg.spurious_rate > 0.0 && !ground_truth.empty()) {
            const int n = std::poisson_distribution<int>(cfg.spurious_rate)(rng);
            for (int s = 0; s < n; ++s) {
                const auto& ref = ground_truth[std::uniform_int_distribution<std::size_t>(0, ground_truth.size() - 1)(rng)];
                const double w = std::min(ref.detection.bbox.width, static_cast<double>(frame.width));
                const double h = std::min(ref.detection.bbox.height, static_cast<double>(frame.height));
                Detection d;
                d.bbox = {unit(rng) * (frame.width - w), unit(rng) * (frame.height - h), w, h};
                d.class_label = all_labels[std::uniform_int_distribution<std::size_t>(0, all_labels.size() - 1)(rng)];
                d.score = std::uniform_real_distribution<double>(cfg.spurious_score.min, cfg.spurious_score.max)(rng);
                d.source = Source::detector;
                out.push_back({frame.frame_id, d, 0});
            }
        }
    }
    return out;
}

}  // namespace boxgraph
