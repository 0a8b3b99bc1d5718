#include "boxgraph/metrics.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace boxgraph {

FrameCounts match_frame(std::span<const BoundingBox> predicted, std::span<const BoundingBox> ground_truth) {
    FrameCounts c;
    std::vector<bool> hit(ground_truth.size(), false);
    for (const auto& p : predicted) {
        bool inside_any = false;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (center_inside(p, ground_truth[g])) {
                inside_any = true;
                hit[g] = true;
            }
        }
        if (!inside_any) ++c.fp;
    }
    for (bool h : hit) ++(h ? c.tp : c.fn);
    return c;
}

DetectionMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    DetectionMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    m.precision_defined = tp + fp > 0;
    m.recall_defined = tp + fn > 0;
    const double p = m.precision_defined ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = m.recall_defined ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.precision = p;
    m.recall = r;
    if (p + r > 0.0) {
        m.f1 = 2.0 * p * r / (p + r);
        m.f2 = 5.0 * p * r / (4.0 * p + r);
    }
    return m;
}

DetectionMetrics aggregate_metrics(std::span<const FrameCounts> per_frame) {
    FrameCounts total;
    for (const auto& c : per_frame) total += c;
    return metrics_from_counts(total.tp, total.fp, total.fn);
}

DetectionMetrics evaluate_polyps(std::span<const FrameDetection> predicted,
                                 std::span<const FrameDetection> ground_truth) {
    std::map<std::string, std::pair<std::vector<BoundingBox>, std::vector<BoundingBox>>> frames;
    for (const auto& r : predicted)
        if (r.detection.is_polyp()) frames[r.frame_id].first.push_back(r.detection.bbox);
    for (const auto& r : ground_truth)
        if (r.detection.is_polyp()) frames[r.frame_id].second.push_back(r.detection.bbox);
    std::vector<FrameCounts> counts;
    counts.reserve(frames.size());
    for (const auto& [_, boxes] : frames) counts.push_back(match_frame(boxes.first, boxes.second));
    return aggregate_metrics(counts);
}

std::string metrics_json(const DetectionMetrics& m) {
    const nlohmann::json j{{"tp", m.tp},
                           {"fp", m.fp},
                           {"fn", m.fn},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"f2", m.f2},
                           {"precision_defined", m.precision_defined},
                           {"recall_defined", m.recall_defined}};
    return j.dump();
}

std::string metrics_table(const DetectionMetrics& m) {
    std::ostringstream os;
    os << std::left << std::setw(6) << "TP" << std::setw(6) << "FP" << std::setw(6) << "FN" << std::setw(11)
       << "Precision" << std::setw(8) << "Recall" << std::setw(7) << "F1"
       << "F2\n";
    os << std::setw(6) << m.tp << std::setw(6) << m.fp << std::setw(6) << m.fn << std::fixed << std::setprecision(3)
       << std::setw(11) << m.precision << std::setw(8) << m.recall << std::setw(7) << m.f1 << m.f2 << '\n';
    if (!m.precision_defined) os << "note: precision undefined (no predictions), reported as 0\n";
    if (!m.recall_defined) os << "note: recall undefined (no ground truth), reported as 0\n";
    return os.str();
}

std::string metrics_csv(const DetectionMetrics& m) {
    std::ostringstream os;
    os << "tp,fp,fn,precision,recall,f1,f2\n"
       << m.tp << ',' << m.fp << ',' << m.fn << ',' << std::setprecision(17) << m.precision << ',' << m.recall << ','
       << m.f1 << ',' << m.f2 << '\n';
    return os.str();
}

}  // namespace boxgraph
