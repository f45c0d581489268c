#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "semrob/errors.hpp"

namespace semrob {

// Minimal deterministic SVG renderers for the result plots. Fixed canvas,
// fixed palette, values formatted with %.6g so identical inputs give
// identical bytes.

namespace plotdetail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    return colors[i % 8];
}

}  // namespace plotdetail

struct Series {
    std::string name;
    std::vector<double> y;
};

// Line chart: one polyline per series over shared x values.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::string& y_label, const std::vector<double>& x,
                                     const std::vector<Series>& series) {
    if (x.empty()) throw param_error("line chart: empty x axis");
    const double w = 640, h = 420, ml = 70, mr = 160, mt = 50, mb = 55;
    double xmin = x.front(), xmax = x.front();
    for (double v : x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    double ymin = 0.0, ymax = 1e-12;
    for (const auto& s : series)
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
    // axes
    svg += "<line x1=\"" + plotdetail::fmt(ml) + "\" y1=\"" + plotdetail::fmt(h - mb) + "\" x2=\"" +
           plotdetail::fmt(w - mr) + "\" y2=\"" + plotdetail::fmt(h - mb) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + plotdetail::fmt(ml) + "\" y1=\"" + plotdetail::fmt(mt) + "\" x2=\"" +
           plotdetail::fmt(ml) + "\" y2=\"" + plotdetail::fmt(h - mb) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + plotdetail::fmt((ml + w - mr) / 2) + "\" y=\"" + plotdetail::fmt(h - 14) +
           "\" text-anchor=\"middle\">" + x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + plotdetail::fmt((mt + h - mb) / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           plotdetail::fmt((mt + h - mb) / 2) + ")\">" + y_label + "</text>\n";
    // ticks
    for (int i = 0; i <= 4; ++i) {
        double ty = ymin + (ymax - ymin) * i / 4.0;
        svg += "<text x=\"" + plotdetail::fmt(ml - 6) + "\" y=\"" + plotdetail::fmt(py(ty) + 4) +
               "\" text-anchor=\"end\">" + plotdetail::fmt(ty) + "</text>\n";
    }
    for (double tx : x) {
        svg += "<text x=\"" + plotdetail::fmt(px(tx)) + "\" y=\"" + plotdetail::fmt(h - mb + 16) +
               "\" text-anchor=\"middle\">" + plotdetail::fmt(tx) + "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (series[s].y.size() != x.size()) throw param_error("line chart: series length mismatch");
        std::string pts;
        for (std::size_t i = 0; i < x.size(); ++i)
            pts += plotdetail::fmt(px(x[i])) + "," + plotdetail::fmt(py(series[s].y[i])) + " ";
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" +
               plotdetail::palette(s) + "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < x.size(); ++i)
            svg += "<circle cx=\"" + plotdetail::fmt(px(x[i])) + "\" cy=\"" +
                   plotdetail::fmt(py(series[s].y[i])) + "\" r=\"3\" fill=\"" +
                   plotdetail::palette(s) + "\"/>\n";
        double ly = mt + 18.0 * static_cast<double>(s);
        svg += "<rect x=\"" + plotdetail::fmt(w - mr + 12) + "\" y=\"" + plotdetail::fmt(ly) +
               "\" width=\"12\" height=\"12\" fill=\"" + plotdetail::palette(s) + "\"/>\n";
        svg += "<text x=\"" + plotdetail::fmt(w - mr + 30) + "\" y=\"" + plotdetail::fmt(ly + 10) +
               "\">" + series[s].name + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

struct BoxStats {
    std::string label;
    double q1 = 0, median = 0, q3 = 0, lo = 0, hi = 0;
};

inline std::string render_box_chart(const std::string& title, const std::string& x_label,
                                    const std::string& y_label, const std::vector<BoxStats>& boxes) {
    if (boxes.empty()) throw param_error("box chart: no boxes");
    const double w = 640, h = 420, ml = 70, mr = 30, mt = 50, mb = 55;
    double ymin = boxes[0].lo, ymax = boxes[0].hi;
    for (const auto& b : boxes) {
        ymin = std::min(ymin, b.lo);
        ymax = std::max(ymax, b.hi);
    }
    if (ymax == ymin) ymax = ymin + 1.0;
    auto py = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };
    double slot = (w - ml - mr) / static_cast<double>(boxes.size());

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
    svg += "<line x1=\"" + plotdetail::fmt(ml) + "\" y1=\"" + plotdetail::fmt(h - mb) + "\" x2=\"" +
           plotdetail::fmt(w - mr) + "\" y2=\"" + plotdetail::fmt(h - mb) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + plotdetail::fmt(ml) + "\" y1=\"" + plotdetail::fmt(mt) + "\" x2=\"" +
           plotdetail::fmt(ml) + "\" y2=\"" + plotdetail::fmt(h - mb) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + plotdetail::fmt((ml + w - mr) / 2) + "\" y=\"" + plotdetail::fmt(h - 14) +
           "\" text-anchor=\"middle\">" + x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + plotdetail::fmt((mt + h - mb) / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           plotdetail::fmt((mt + h - mb) / 2) + ")\">" + y_label + "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        double ty = ymin + (ymax - ymin) * i / 4.0;
        svg += "<text x=\"" + plotdetail::fmt(ml - 6) + "\" y=\"" + plotdetail::fmt(py(ty) + 4) +
               "\" text-anchor=\"end\">" + plotdetail::fmt(ty) + "</text>\n";
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        double cx = ml + slot * (static_cast<double>(i) + 0.5);
        double bw = slot * 0.5;
        svg += "<line x1=\"" + plotdetail::fmt(cx) + "\" y1=\"" + plotdetail::fmt(py(b.lo)) +
               "\" x2=\"" + plotdetail::fmt(cx) + "\" y2=\"" + plotdetail::fmt(py(b.hi)) +
               "\" stroke=\"black\"/>\n";
        svg += "<rect x=\"" + plotdetail::fmt(cx - bw / 2) + "\" y=\"" + plotdetail::fmt(py(b.q3)) +
               "\" width=\"" + plotdetail::fmt(bw) + "\" height=\"" +
               plotdetail::fmt(py(b.q1) - py(b.q3)) + "\" fill=\"#aec7e8\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + plotdetail::fmt(cx - bw / 2) + "\" y1=\"" + plotdetail::fmt(py(b.median)) +
               "\" x2=\"" + plotdetail::fmt(cx + bw / 2) + "\" y2=\"" + plotdetail::fmt(py(b.median)) +
               "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + plotdetail::fmt(cx) + "\" y=\"" + plotdetail::fmt(h - mb + 16) +
               "\" text-anchor=\"middle\">" + b.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace semrob
