#include "dsa/timeline_svg.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "dsa/error.hpp"
#include "dsa/metrics.hpp"

namespace dsa {

namespace {

// fixed palette, cycled by class id
constexpr const char* kPalette[] = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
    "#fabfd2", "#b6992d", "#499894", "#79706e",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

constexpr double kBarWidth = 960.0;
constexpr double kBarHeight = 36.0;
constexpr double kMargin = 20.0;
constexpr double kLabelWidth = 110.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void draw_bar(std::ostringstream& os, std::span<const int> labels, double y) {
    const double total = static_cast<double>(labels.size());
    for (const Segment& s : to_segments(labels)) {
        const double x =
            kMargin + kLabelWidth + kBarWidth * static_cast<double>(s.start) / total;
        const double w =
            kBarWidth * static_cast<double>(s.end - s.start) / total;
        const char* color =
            kPalette[static_cast<std::size_t>(s.label) % kPaletteSize];
        os << "  <rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
           << fmt(w) << "\" height=\"" << fmt(kBarHeight) << "\" fill=\""
           << color << "\"/>\n";
    }
}

} // namespace

std::string render_timeline_svg(std::span<const int> gt,
                                std::span<const int> pred,
                                const std::vector<std::string>& class_names) {
    if (gt.size() != pred.size()) {
        throw ContractError("timeline: ground truth has " +
                            std::to_string(gt.size()) + " frames, prediction " +
                            std::to_string(pred.size()));
    }
    if (gt.empty()) throw ContractError("timeline: empty label sequences");

    std::set<int> used(gt.begin(), gt.end());
    used.insert(pred.begin(), pred.end());
    for (int id : used) {
        if (id < 0 || static_cast<std::size_t>(id) >= class_names.size()) {
            throw ContractError("timeline: class id " + std::to_string(id) +
                                " has no name");
        }
    }

    const double legend_rows = static_cast<double>(used.size());
    const double height = kMargin * 2 + kBarHeight * 2 + 16.0 + 24.0 +
                          legend_rows * 22.0;
    const double width = kMargin * 2 + kLabelWidth + kBarWidth;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
       << "\" height=\"" << fmt(height) << "\" font-family=\"sans-serif\" "
          "font-size=\"13\">\n";
    os << "  <rect x=\"0\" y=\"0\" width=\"" << fmt(width) << "\" height=\""
       << fmt(height) << "\" fill=\"#ffffff\"/>\n";

    const double gt_y = kMargin;
    const double pred_y = kMargin + kBarHeight + 16.0;
    os << "  <text x=\"" << fmt(kMargin) << "\" y=\""
       << fmt(gt_y + kBarHeight / 2 + 4) << "\">ground truth</text>\n";
    draw_bar(os, gt, gt_y);
    os << "  <text x=\"" << fmt(kMargin) << "\" y=\""
       << fmt(pred_y + kBarHeight / 2 + 4) << "\">prediction</text>\n";
    draw_bar(os, pred, pred_y);

    double legend_y = pred_y + kBarHeight + 24.0;
    for (int id : used) {
        const char* color =
            kPalette[static_cast<std::size_t>(id) % kPaletteSize];
        os << "  <rect x=\"" << fmt(kMargin + kLabelWidth) << "\" y=\""
           << fmt(legend_y) << "\" width=\"14.00\" height=\"14.00\" fill=\""
           << color << "\"/>\n";
        os << "  <text x=\"" << fmt(kMargin + kLabelWidth + 20.0) << "\" y=\""
           << fmt(legend_y + 12.0) << "\">"
           << class_names[static_cast<std::size_t>(id)] << "</text>\n";
        legend_y += 22.0;
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace dsa
