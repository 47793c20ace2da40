#pragma once

#include <string>
#include <vector>

namespace xfmr {

/// One polyline in a chart panel. NaN y-values break the line.
struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

struct ChartPanel {
    std::string title;
    std::string x_label, y_label;
    std::vector<Series> series;
    bool log_x = false;          // position x on a log10 scale
    std::vector<double> x_ticks; // explicit tick positions (otherwise 5 linear ticks)
};

/// Renders panels as one self-contained SVG document, laid out in a grid of
/// `cols` columns. Output is deterministic: fixed palette, fixed float
/// formatting, no timestamps.
std::string render_chart_svg(const std::vector<ChartPanel>& panels, int cols,
                             const std::string& heading = "");

}  // namespace xfmr
