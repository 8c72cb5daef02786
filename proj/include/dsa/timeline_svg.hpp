#pragma once

#include <span>
#include <string>
#include <vector>

namespace dsa {

// Two stacked timeline bars (ground truth above, prediction below) with one
// colour per class id and a legend of class names. Output bytes are a pure
// function of the inputs.
std::string render_timeline_svg(std::span<const int> gt,
                                std::span<const int> pred,
                                const std::vector<std::string>& class_names);

} // namespace dsa
