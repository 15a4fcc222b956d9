#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal static SVG line plots; enough for convergence curves and
// performance profiles without pulling in a plotting dependency.

namespace cpnest {

struct SvgSeries {
    std::string label;
    std::string color = "#000000";
    std::vector<double> x, y;
    std::vector<bool> marker;  // optional per-point emphasis markers
};

struct SvgPlot {
    std::string title, x_label, y_label;
    bool log_y = false;
    std::vector<SvgSeries> series;

    void write(const std::filesystem::path& path) const {
        if (series.empty()) throw std::invalid_argument("svg plot needs at least one series");
        const double width = 820, height = 540;
        const double ml = 78, mr = 24, mt = 34, mb = 56;
        const double pw = width - ml - mr, ph = height - mt - mb;

        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const SvgSeries& s : series) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                double yv = s.y[i];
                if (log_y) {
                    if (!(yv > 0.0)) continue;
                    yv = std::log10(yv);
                }
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, yv);
                ymax = std::max(ymax, yv);
            }
        }
        if (xmin > xmax) { xmin = 0; xmax = 1; }
        if (ymin > ymax) { ymin = 0; ymax = 1; }
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymax = ymin + 1;
        const double xpad = 0.02 * (xmax - xmin), ypad = 0.04 * (ymax - ymin);
        xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

        auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
        auto py = [&](double y) {
            const double v = log_y ? std::log10(y) : y;
            return mt + ph - (v - ymin) / (ymax - ymin) * ph;
        };

        std::ofstream out(path);
        if (!out) throw std::invalid_argument("cannot open svg for writing: " + path.string());
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
            << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
            << title << "</text>\n";

        // axes
        out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
            << mt + ph << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
            << "\" stroke=\"black\"/>\n";

        // x ticks: 6 evenly spaced
        for (int i = 0; i <= 5; ++i) {
            const double xv = xmin + (xmax - xmin) * i / 5.0;
            out << "<line x1=\"" << px(xv) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(xv)
                << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4g", xv);
            out << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 20
                << "\" text-anchor=\"middle\" font-size=\"12\">" << buf << "</text>\n";
        }
        // y ticks: powers of 10 when log scale, else 6 even ticks
        if (log_y) {
            const int lo = static_cast<int>(std::ceil(ymin));
            const int hi = static_cast<int>(std::floor(ymax));
            for (int e = lo; e <= hi; ++e) {
                const double yv = std::pow(10.0, e);
                out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml
                    << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n";
                out << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
                    << "\" text-anchor=\"end\" font-size=\"12\">1e" << e << "</text>\n";
            }
        } else {
            for (int i = 0; i <= 5; ++i) {
                const double yv = ymin + (ymax - ymin) * i / 5.0;
                const double ypix = mt + ph - ph * i / 5.0;
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.3g", yv);
                out << "<line x1=\"" << ml - 5 << "\" y1=\"" << ypix << "\" x2=\"" << ml
                    << "\" y2=\"" << ypix << "\" stroke=\"black\"/>\n";
                out << "<text x=\"" << ml - 8 << "\" y=\"" << ypix + 4
                    << "\" text-anchor=\"end\" font-size=\"12\">" << buf << "</text>\n";
            }
        }
        out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
            << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
        out << "<text x=\"18\" y=\"" << mt + ph / 2
            << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
            << mt + ph / 2 << ")\">" << y_label << "</text>\n";

        // series
        for (const SvgSeries& s : series) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (log_y && !(s.y[i] > 0.0)) continue;
                out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            }
            out << "\"/>\n";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (i < s.marker.size() && s.marker[i] && (!log_y || s.y[i] > 0.0))
                    out << "<circle class=\"restart-marker\" cx=\"" << px(s.x[i]) << "\" cy=\""
                        << py(s.y[i]) << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
            }
        }

        // legend
        double ly = mt + 14;
        for (const SvgSeries& s : series) {
            if (s.label.empty()) continue;
            out << "<line x1=\"" << ml + pw - 170 << "\" y1=\"" << ly << "\" x2=\""
                << ml + pw - 140 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << ml + pw - 134 << "\" y=\"" << ly + 4
                << "\" font-size=\"12\">" << s.label << "</text>\n";
            ly += 18;
        }
        out << "</svg>\n";
        if (!out) throw std::invalid_argument("svg write failed: " + path.string());
    }
};

/// Color cycle for multi-series plots.
inline std::string series_color(std::size_t i) {
    static const char* colors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c",
                                   "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    return colors[i % (sizeof(colors) / sizeof(colors[0]))];
}

}  // namespace cpnest
