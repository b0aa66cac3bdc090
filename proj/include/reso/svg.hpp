#pragma once

#include <string>
#include <vector>

namespace reso {

// One polyline; x positions are sample indices starting at t0.
struct SvgSeries {
    std::string label;
    std::string color;
    int t0 = 0;
    std::vector<double> values;
    bool dashed = false;
};

// Dependency-free line chart: shared axes over all series, light grid,
// legend in the top-right corner. Returns the SVG document text.
std::string render_svg_lines(const std::vector<SvgSeries>& series, int width, int height,
                             const std::string& title);

} // namespace reso
