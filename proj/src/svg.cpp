#include "xfmr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace xfmr {

namespace {

constexpr int kPanelW = 380;
constexpr int kPanelH = 280;
constexpr int kMarginL = 56, kMarginR = 12, kMarginT = 30, kMarginB = 40;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Range {
    double lo = 0, hi = 1;
};

Range y_range(const ChartPanel& p) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : p.series)
        for (const auto& [x, y] : s.points)
            if (std::isfinite(y)) {
                lo = std::min(lo, y);
                hi = std::max(hi, y);
            }
    if (!(lo <= hi)) return {0, 1};
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.06 * (hi - lo);
    return {lo - pad, hi + pad};
}

Range x_range(const ChartPanel& p) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto tx = [&](double x) { return p.log_x ? std::log10(x) : x; };
    for (const auto& s : p.series)
        for (const auto& [x, y] : s.points)
            if (std::isfinite(tx(x))) {
                lo = std::min(lo, tx(x));
                hi = std::max(hi, tx(x));
            }
    if (!(lo <= hi)) return {0, 1};
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    return {lo, hi};
}

}  // namespace

std::string render_chart_svg(const std::vector<ChartPanel>& panels, int cols,
                             const std::string& heading) {
    cols = std::max(1, cols);
    const int rows = static_cast<int>((panels.size() + cols - 1) / cols);
    const int head = heading.empty() ? 0 : 26;
    const int width = cols * kPanelW;
    const int height = rows * kPanelH + head;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    if (!heading.empty())
        svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">" << heading
            << "</text>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const ChartPanel& p = panels[pi];
        const int ox = static_cast<int>(pi % cols) * kPanelW;
        const int oy = static_cast<int>(pi / cols) * kPanelH + head;
        const int plot_x = ox + kMarginL, plot_y = oy + kMarginT;
        const int plot_w = kPanelW - kMarginL - kMarginR;
        const int plot_h = kPanelH - kMarginT - kMarginB;

        const Range xr = x_range(p);
        const Range yr = y_range(p);
        auto tx = [&](double x) { return p.log_x ? std::log10(x) : x; };
        auto px = [&](double x) {
            return plot_x + (tx(x) - xr.lo) / (xr.hi - xr.lo) * plot_w;
        };
        auto py = [&](double y) {
            return plot_y + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
        };

        svg << "<text x=\"" << ox + kPanelW / 2 << "\" y=\"" << oy + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "font-weight=\"bold\">"
            << p.title << "</text>\n";
        svg << "<rect x=\"" << plot_x << "\" y=\"" << plot_y << "\" width=\"" << plot_w
            << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";

        // x ticks
        std::vector<double> xticks = p.x_ticks;
        if (xticks.empty())
            for (int t = 0; t <= 4; ++t)
                xticks.push_back(p.log_x
                                     ? std::pow(10.0, xr.lo + (xr.hi - xr.lo) * t / 4.0)
                                     : xr.lo + (xr.hi - xr.lo) * t / 4.0);
        for (double xt : xticks) {
            const double x = px(xt);
            svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << plot_y + plot_h << "\" x2=\""
                << fmt2(x) << "\" y2=\"" << plot_y + plot_h + 4 << "\" stroke=\"#333\"/>\n";
            svg << "<text x=\"" << fmt2(x) << "\" y=\"" << plot_y + plot_h + 16
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
                << fmt(xt) << "</text>\n";
        }
        // y ticks
        for (int t = 0; t <= 4; ++t) {
            const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
            const double y = py(yv);
            svg << "<line x1=\"" << plot_x - 4 << "\" y1=\"" << fmt2(y) << "\" x2=\"" << plot_x
                << "\" y2=\"" << fmt2(y) << "\" stroke=\"#333\"/>\n";
            svg << "<line x1=\"" << plot_x << "\" y1=\"" << fmt2(y) << "\" x2=\""
                << plot_x + plot_w << "\" y2=\"" << fmt2(y)
                << "\" stroke=\"#eee\"/>\n";
            svg << "<text x=\"" << plot_x - 6 << "\" y=\"" << fmt2(y + 3)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
                << fmt(yv) << "</text>\n";
        }
        svg << "<text x=\"" << ox + kPanelW / 2 << "\" y=\"" << oy + kPanelH - 6
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << p.x_label << "</text>\n";
        svg << "<text x=\"" << ox + 14 << "\" y=\"" << plot_y + plot_h / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
            << "transform=\"rotate(-90 " << ox + 14 << " " << plot_y + plot_h / 2 << ")\">"
            << p.y_label << "</text>\n";

        // series
        for (std::size_t si = 0; si < p.series.size(); ++si) {
            const Series& s = p.series[si];
            const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
            std::ostringstream pts;
            bool open = false;
            for (const auto& [x, y] : s.points) {
                if (!std::isfinite(y) || !std::isfinite(tx(x))) {
                    if (open) {
                        svg << "<polyline points=\"" << pts.str()
                            << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
                            << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
                        pts.str("");
                        open = false;
                    }
                    continue;
                }
                pts << fmt2(px(x)) << "," << fmt2(py(y)) << " ";
                open = true;
            }
            if (open)
                svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
                    << "/>\n";
            // point markers
            for (const auto& [x, y] : s.points)
                if (std::isfinite(y) && std::isfinite(tx(x)))
                    svg << "<circle cx=\"" << fmt2(px(x)) << "\" cy=\"" << fmt2(py(y))
                        << "\" r=\"2\" fill=\"" << color << "\"/>\n";
        }

        // legend
        for (std::size_t si = 0; si < p.series.size(); ++si) {
            const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
            const int ly = plot_y + 12 + static_cast<int>(si) * 13;
            svg << "<line x1=\"" << plot_x + plot_w - 86 << "\" y1=\"" << ly - 3 << "\" x2=\""
                << plot_x + plot_w - 70 << "\" y2=\"" << ly - 3 << "\" stroke=\"" << color
                << "\" stroke-width=\"1.5\""
                << (p.series[si].dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
            svg << "<text x=\"" << plot_x + plot_w - 66 << "\" y=\"" << ly
                << "\" font-family=\"sans-serif\" font-size=\"9\">" << p.series[si].label
                << "</text>\n";
        }
        if (p.series.empty())
            svg << "<text x=\"" << plot_x + plot_w / 2 << "\" y=\"" << plot_y + plot_h / 2
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
                   "fill=\"#999\">no data</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace xfmr
