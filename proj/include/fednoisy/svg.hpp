#pragma once

// Standalone SVG line charts: iteration on x, metric on a log-scaled y, one
// polyline per series. Series that end before the x-axis maximum (diverged
// and truncated runs) get an end marker.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fednoisy {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

namespace svgdetail {

inline const char* series_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

}  // namespace svgdetail

// Writes a complete SVG document. With no series (or no finite positive data
// on a log axis) the chart still renders axes and a note, so degenerate
// inputs produce a valid file.
inline void write_line_chart_svg(const std::string& path, const std::string& title,
                                 const std::string& y_label,
                                 const std::vector<ChartSeries>& series, bool log_y = true) {
    const double width = 640, height = 420;
    const double ml = 70, mr = 20, mt = 40, mb = 45;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;

    double xmin = 0, xmax = 1, ymin = 1, ymax = 10;
    bool have_data = false;
    const double log_floor = 1e-16;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double y = s.y[i];
            if (!std::isfinite(y)) continue;
            if (log_y) y = std::max(y, log_floor);
            if (!have_data) {
                xmin = xmax = s.x[i];
                ymin = ymax = y;
                have_data = true;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin * 10;
    auto ty = [&](double y) {
        if (log_y) {
            y = std::max(y, log_floor);
            double f = (std::log10(y) - std::log10(ymin)) / (std::log10(ymax) - std::log10(ymin));
            return mt + plot_h * (1.0 - f);
        }
        return mt + plot_h * (1.0 - (y - ymin) / (ymax - ymin));
    };
    auto tx = [&](double x) { return ml + plot_w * (x - xmin) / (xmax - xmin); };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"15\">" << title << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w << "\" y2=\""
        << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration</text>\n";
    out << "<text x=\"16\" y=\"" << mt + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
        << mt + plot_h / 2 << ")\">" << y_label << (log_y ? " (log scale)" : "") << "</text>\n";

    // x ticks
    for (int i = 0; i <= 4; ++i) {
        double x = xmin + (xmax - xmin) * i / 4.0;
        out << "<line x1=\"" << tx(x) << "\" y1=\"" << mt + plot_h << "\" x2=\"" << tx(x) << "\" y2=\""
            << mt + plot_h + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << tx(x) << "\" y=\"" << mt + plot_h + 17
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << svgdetail::fmt(x) << "</text>\n";
    }
    // y ticks
    if (log_y && have_data) {
        int lo = static_cast<int>(std::floor(std::log10(ymin)));
        int hi = static_cast<int>(std::ceil(std::log10(ymax)));
        int step = std::max(1, (hi - lo) / 6);
        for (int e = lo; e <= hi; e += step) {
            double y = std::pow(10.0, e);
            if (y < ymin || y > ymax) continue;
            out << "<line x1=\"" << ml - 4 << "\" y1=\"" << ty(y) << "\" x2=\"" << ml << "\" y2=\""
                << ty(y) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << ml - 7 << "\" y=\"" << ty(y) + 3
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">1e" << e
                << "</text>\n";
        }
    }

    if (!have_data) {
        out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << mt + plot_h / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#888\">"
            << "no data</text>\n";
    }

    double global_xmax = xmax;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.x.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << svgdetail::series_color(si)
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) break;
            out << svgdetail::fmt(tx(s.x[i])) << "," << svgdetail::fmt(ty(s.y[i])) << " ";
        }
        out << "\"/>\n";
        // mark series that stop before the axis end (truncated by divergence)
        if (s.x.back() < global_xmax - 1e-9) {
            out << "<circle cx=\"" << svgdetail::fmt(tx(s.x.back())) << "\" cy=\""
                << svgdetail::fmt(ty(s.y.back())) << "\" r=\"3.5\" fill=\""
                << svgdetail::series_color(si) << "\"/>\n";
        }
        // legend
        double ly = mt + 14 + 16 * static_cast<double>(si);
        out << "<line x1=\"" << ml + plot_w - 120 << "\" y1=\"" << ly << "\" x2=\"" << ml + plot_w - 98
            << "\" y2=\"" << ly << "\" stroke=\"" << svgdetail::series_color(si)
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + plot_w - 93 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace fednoisy
