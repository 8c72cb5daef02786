#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dsa {

// Maximal constant run of one label: [start, end) frame indices.
struct Segment {
    int label = 0;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const Segment&) const = default;
};

std::vector<Segment> to_segments(std::span<const int> labels);

// Percentage of frames whose predicted label matches the ground truth.
double frame_accuracy(std::span<const int> pred, std::span<const int> gt);

// 100·(1 − Levenshtein(pred segment labels, gt segment labels) / max count).
double edit_score(std::span<const int> pred, std::span<const int> gt,
                  std::optional<int> ignore_background = std::nullopt);

// Segmental F1: a predicted segment is a true positive when its IoU with the
// best not-yet-matched same-label ground-truth segment reaches k (inclusive).
double f1_at_overlap(std::span<const int> pred, std::span<const int> gt,
                     double k,
                     std::optional<int> ignore_background = std::nullopt);

// Arithmetic mean of the five standard metrics.
double summarize(double acc, double edit, double f1_10, double f1_25,
                 double f1_50);

// Frame accuracy restricted to ground-truth background frames.
double background_accuracy(std::span<const int> pred, std::span<const int> gt,
                           int background);

struct VideoMetrics {
    std::string id;
    double acc = 0.0;
    double edit = 0.0;
    double f1_10 = 0.0;
    double f1_25 = 0.0;
    double f1_50 = 0.0;
    double avg = 0.0;
};

VideoMetrics evaluate_video(const std::string& id, std::span<const int> pred,
                            std::span<const int> gt,
                            std::optional<int> ignore_background = std::nullopt);

// Column-wise mean across videos, reported under the id "mean".
VideoMetrics mean_metrics(std::span<const VideoMetrics> rows);

// "video_id,acc,edit,f1_10,f1_25,f1_50,avg" rows plus the mean row.
std::string metrics_csv(std::span<const VideoMetrics> rows);
std::string metrics_table(std::span<const VideoMetrics> rows);

} // namespace dsa
