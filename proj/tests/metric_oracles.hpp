#pragma once

// Brute-force metric references: a memoised full-recursion Levenshtein and an
// exhaustive IoU matcher, both structured differently from the production
// implementations.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "dsa/metrics.hpp"

namespace moracle {

inline std::size_t lev_recursive(const std::vector<int>& a,
                                 const std::vector<int>& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> rec =
        [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == 0) return j;
        if (j == 0) return i;
        const auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const std::size_t subst =
            rec(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
        const std::size_t result =
            std::min({rec(i - 1, j) + 1, rec(i, j - 1) + 1, subst});
        memo[key] = result;
        return result;
    };
    return rec(a.size(), b.size());
}

inline std::vector<int> segment_labels(std::span<const int> y) {
    std::vector<int> out;
    for (const dsa::Segment& s : dsa::to_segments(y)) out.push_back(s.label);
    return out;
}

inline double edit_oracle(std::span<const int> pred, std::span<const int> gt) {
    const std::vector<int> p = segment_labels(pred);
    const std::vector<int> g = segment_labels(gt);
    const double score =
        100.0 * (1.0 - static_cast<double>(lev_recursive(p, g)) /
                           static_cast<double>(std::max(p.size(), g.size())));
    return std::clamp(score, 0.0, 100.0);
}

// Exhaustive matcher: every predicted segment scans all unmatched same-label
// ground-truth segments with per-frame IoU counting.
inline double f1_oracle(std::span<const int> pred, std::span<const int> gt,
                        double k) {
    const std::vector<dsa::Segment> ps = dsa::to_segments(pred);
    const std::vector<dsa::Segment> gs = dsa::to_segments(gt);
    std::vector<bool> used(gs.size(), false);
    std::size_t tp = 0;
    for (const dsa::Segment& p : ps) {
        double best = -1.0;
        std::size_t best_j = gs.size();
        for (std::size_t j = 0; j < gs.size(); ++j) {
            if (used[j] || gs[j].label != p.label) continue;
            double inter = 0.0;
            double uni = 0.0;
            const std::size_t lo = std::min(p.start, gs[j].start);
            const std::size_t hi = std::max(p.end, gs[j].end);
            for (std::size_t t = lo; t < hi; ++t) {
                const bool in_p = t >= p.start && t < p.end;
                const bool in_g = t >= gs[j].start && t < gs[j].end;
                if (in_p && in_g) inter += 1.0;
                if (in_p || in_g) uni += 1.0;
            }
            const double iou = inter / uni;
            if (iou > best) {
                best = iou;
                best_j = j;
            }
        }
        if (best_j < gs.size() && best >= k) {
            used[best_j] = true;
            ++tp;
        }
    }
    const std::size_t fp = ps.size() - tp;
    const std::size_t fn = gs.size() - tp;
    if (tp == 0) return 0.0;
    const double prec = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double rec = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 100.0 * 2.0 * prec * rec / (prec + rec);
}

inline std::vector<int> random_sequence(std::mt19937_64& rng,
                                        std::size_t max_len, int classes) {
    std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
    std::uniform_int_distribution<int> label(0, classes - 1);
    std::vector<int> y(len_dist(rng));
    for (int& v : y) v = label(rng);
    return y;
}

} // namespace moracle
