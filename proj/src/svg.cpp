#include "reso/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace reso {

std::string render_svg_lines(const std::vector<SvgSeries>& series, int width, int height,
                             const std::string& title) {
    const int margin = 40;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : series) {
        for (size_t i = 0; i < s.values.size(); ++i) {
            const double x = s.t0 + static_cast<double>(i);
            const double y = s.values[i];
            if (first) {
                x_min = x_max = x;
                y_min = y_max = y;
                first = false;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    auto px = [&](double x) {
        return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin);
    };

    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                  "viewBox=\"0 0 %d %d\">\n",
                  width, height, width, height);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n",
                  margin, title.c_str());
    out += buf;

    // frame and zero line
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                  "stroke=\"#888\"/>\n",
                  margin, margin, width - 2 * margin, height - 2 * margin);
    out += buf;
    if (y_min < 0 && y_max > 0) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#ccc\"/>\n",
                      margin, py(0), width - margin, py(0));
        out += buf;
    }

    int legend_y = margin + 14;
    for (const auto& s : series) {
        out += "<polyline fill=\"none\" stroke=\"" + s.color + "\"";
        if (s.dashed) out += " stroke-dasharray=\"5,4\"";
        out += " stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(s.t0 + static_cast<double>(i)),
                          py(s.values[i]));
            out += buf;
        }
        out += "\"/>\n";
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                      "fill=\"%s\">%s</text>\n",
                      width - margin - 150, legend_y, s.color.c_str(), s.label.c_str());
        out += buf;
        legend_y += 16;
    }
    out += "</svg>\n";
    return out;
}

} // namespace reso
