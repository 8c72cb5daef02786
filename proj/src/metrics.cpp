#include "dsa/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dsa/error.hpp"

namespace dsa {

namespace {

void require_equal_lengths(std::span<const int> pred, std::span<const int> gt,
                           const char* who) {
    if (pred.size() != gt.size()) {
        throw ContractError(std::string(who) + ": sequence lengths differ: " +
                            std::to_string(pred.size()) + " vs " +
                            std::to_string(gt.size()));
    }
    if (gt.empty()) {
        throw ContractError(std::string(who) + ": empty label sequence");
    }
}

std::vector<Segment> segments_without(std::span<const int> labels,
                                      std::optional<int> ignore) {
    std::vector<Segment> segs = to_segments(labels);
    if (ignore) {
        std::erase_if(segs,
                      [&](const Segment& s) { return s.label == *ignore; });
    }
    return segs;
}

std::size_t levenshtein(const std::vector<Segment>& a,
                        const std::vector<Segment>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t subst =
                prev[j - 1] + (a[i - 1].label == b[j - 1].label ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double segment_iou(const Segment& a, const Segment& b) {
    const std::size_t lo = std::max(a.start, b.start);
    const std::size_t hi = std::min(a.end, b.end);
    const std::size_t inter = hi > lo ? hi - lo : 0;
    const std::size_t uni =
        std::max(a.end, b.end) - std::min(a.start, b.start);
    return uni == 0 ? 0.0
                    : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace

std::vector<Segment> to_segments(std::span<const int> labels) {
    if (labels.empty()) {
        throw ContractError("to_segments: empty label sequence");
    }
    std::vector<Segment> segs;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= labels.size(); ++i) {
        if (i == labels.size() || labels[i] != labels[start]) {
            segs.push_back({labels[start], start, i});
            start = i;
        }
    }
    return segs;
}

double frame_accuracy(std::span<const int> pred, std::span<const int> gt) {
    require_equal_lengths(pred, gt, "frame_accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (pred[i] == gt[i]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gt.size());
}

double edit_score(std::span<const int> pred, std::span<const int> gt,
                  std::optional<int> ignore_background) {
    require_equal_lengths(pred, gt, "edit_score");
    const std::vector<Segment> ps = segments_without(pred, ignore_background);
    const std::vector<Segment> gs = segments_without(gt, ignore_background);
    const std::size_t longest = std::max(ps.size(), gs.size());
    if (longest == 0) return 100.0; // nothing left to compare on either side
    const double score =
        100.0 * (1.0 - static_cast<double>(levenshtein(ps, gs)) /
                           static_cast<double>(longest));
    return std::clamp(score, 0.0, 100.0);
}

double f1_at_overlap(std::span<const int> pred, std::span<const int> gt,
                     double k, std::optional<int> ignore_background) {
    require_equal_lengths(pred, gt, "f1_at_overlap");
    if (k <= 0.0 || k > 1.0) {
        throw ContractError("f1_at_overlap: overlap must be in (0, 1], got " +
                            std::to_string(k));
    }
    const std::vector<Segment> ps = segments_without(pred, ignore_background);
    const std::vector<Segment> gs = segments_without(gt, ignore_background);

    std::size_t tp = 0, fp = 0;
    std::vector<bool> matched(gs.size(), false);
    for (const Segment& p : ps) {
        double best_iou = -1.0;
        std::size_t best = gs.size();
        for (std::size_t j = 0; j < gs.size(); ++j) {
            if (matched[j] || gs[j].label != p.label) continue;
            const double iou = segment_iou(p, gs[j]);
            if (iou > best_iou) {
                best_iou = iou;
                best = j;
            }
        }
        if (best < gs.size() && best_iou >= k) {
            matched[best] = true;
            ++tp;
        } else {
            ++fp;
        }
    }
    const std::size_t fn = gs.size() - tp;
    if (tp == 0) return 0.0;
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double summarize(double acc, double edit, double f1_10, double f1_25,
                 double f1_50) {
    return (acc + edit + f1_10 + f1_25 + f1_50) / 5.0;
}

double background_accuracy(std::span<const int> pred, std::span<const int> gt,
                           int background) {
    require_equal_lengths(pred, gt, "background_accuracy");
    std::size_t total = 0, hits = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] != background) continue;
        ++total;
        if (pred[i] == gt[i]) ++hits;
    }
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

VideoMetrics evaluate_video(const std::string& id, std::span<const int> pred,
                            std::span<const int> gt,
                            std::optional<int> ignore_background) {
    VideoMetrics m;
    m.id = id;
    m.acc = frame_accuracy(pred, gt);
    m.edit = edit_score(pred, gt, ignore_background);
    m.f1_10 = f1_at_overlap(pred, gt, 0.10, ignore_background);
    m.f1_25 = f1_at_overlap(pred, gt, 0.25, ignore_background);
    m.f1_50 = f1_at_overlap(pred, gt, 0.50, ignore_background);
    m.avg = summarize(m.acc, m.edit, m.f1_10, m.f1_25, m.f1_50);
    return m;
}

VideoMetrics mean_metrics(std::span<const VideoMetrics> rows) {
    VideoMetrics m;
    m.id = "mean";
    if (rows.empty()) return m;
    for (const VideoMetrics& r : rows) {
        m.acc += r.acc;
        m.edit += r.edit;
        m.f1_10 += r.f1_10;
        m.f1_25 += r.f1_25;
        m.f1_50 += r.f1_50;
    }
    const double n = static_cast<double>(rows.size());
    m.acc /= n;
    m.edit /= n;
    m.f1_10 /= n;
    m.f1_25 /= n;
    m.f1_50 /= n;
    m.avg = summarize(m.acc, m.edit, m.f1_10, m.f1_25, m.f1_50);
    return m;
}

namespace {

std::string metric_row(const char* fmt, const VideoMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), fmt, m.id.c_str(), m.acc, m.edit, m.f1_10,
                  m.f1_25, m.f1_50, m.avg);
    return buf;
}

} // namespace

std::string metrics_csv(std::span<const VideoMetrics> rows) {
    std::ostringstream os;
    os << "video_id,acc,edit,f1_10,f1_25,f1_50,avg\n";
    for (const VideoMetrics& m : rows) {
        os << metric_row("%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", m);
    }
    os << metric_row("%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", mean_metrics(rows));
    return os.str();
}

std::string metrics_table(std::span<const VideoMetrics> rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-24s %8s %8s %8s %8s %8s %8s\n", "video",
                  "Acc", "Edit", "F1@10", "F1@25", "F1@50", "Avg");
    os << buf;
    for (const VideoMetrics& m : rows) {
        os << metric_row("%-24s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n", m);
    }
    os << metric_row("%-24s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                     mean_metrics(rows));
    return os.str();
}

} // namespace dsa
