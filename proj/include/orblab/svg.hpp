#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "orblab/common.hpp"

namespace orblab {

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// five-stop blue->green->yellow colormap, t in [0,1]
inline std::string heat_color(double t) {
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::min(1.0, std::max(0.0, t));
    const double x = t * 4.0;
    const int i = std::min(3, static_cast<int>(x));
    const double f = x - i;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                  static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                  static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
    return buf;
}

} // namespace detail

/// Grid heatmap of a 2D slice, row-major values[res0 * res1]. Deterministic output.
inline std::string svg_heatmap(const std::vector<double>& values, int res0, int res1,
                               const std::string& title) {
    const int cell = 8;
    const int w = res0 * cell, h = res1 * cell, top = 24;
    double lo = kInf, hi = -kInf;
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h + top) + "\">\n";
    out += "<text x=\"4\" y=\"16\" font-family=\"monospace\" font-size=\"12\">" + title +
           " [" + detail::fmt(lo) + ", " + detail::fmt(hi) + "]</text>\n";
    for (int j = 0; j < res1; ++j)
        for (int i = 0; i < res0; ++i) {
            const double v = values[static_cast<std::size_t>(j) * res0 + i];
            out += "<rect x=\"" + std::to_string(i * cell) + "\" y=\"" +
                   std::to_string(top + (res1 - 1 - j) * cell) + "\" width=\"" + std::to_string(cell) +
                   "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
                   detail::heat_color((v - lo) / (hi - lo)) + "\"/>\n";
        }
    out += "</svg>\n";
    return out;
}

/// Simple line plot of series over shared x values, with an optional horizontal
/// reference line. Deterministic output.
inline std::string svg_line_plot(const std::vector<double>& xs,
                                 const std::vector<std::pair<std::string, std::vector<double>>>& series,
                                 double reference, const std::string& ref_label,
                                 const std::string& title) {
    const int w = 480, h = 320, ml = 60, mr = 16, mt = 28, mb = 40;
    double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
    for (double x : xs) {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
    }
    for (const auto& s : series)
        for (double y : s.second) {
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    if (std::isfinite(reference)) {
        ylo = std::min(ylo, reference);
        yhi = std::max(yhi, reference);
    }
    if (xhi <= xlo) xhi = xlo + 1.0;
    if (yhi <= ylo) yhi = ylo + 1.0;
    const double ypad = 0.08 * (yhi - ylo);
    ylo -= ypad;
    yhi += ypad;
    auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ylo) / (yhi - ylo) * (h - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\">\n";
    out += "<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"13\">" + title + "</text>\n";
    out += "<rect x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(mt) + "\" width=\"" +
           std::to_string(w - ml - mr) + "\" height=\"" + std::to_string(h - mt - mb) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";
    // axis extremes
    out += "<text x=\"" + detail::fmt(px(xlo)) + "\" y=\"" + std::to_string(h - 20) +
           "\" font-family=\"monospace\" font-size=\"11\">" + detail::fmt(xlo) + "</text>\n";
    out += "<text x=\"" + detail::fmt(px(xhi) - 30) + "\" y=\"" + std::to_string(h - 20) +
           "\" font-family=\"monospace\" font-size=\"11\">" + detail::fmt(xhi) + "</text>\n";
    out += "<text x=\"4\" y=\"" + detail::fmt(py(ylo)) + "\" font-family=\"monospace\" font-size=\"11\">" +
           detail::fmt(ylo) + "</text>\n";
    out += "<text x=\"4\" y=\"" + detail::fmt(py(yhi) + 10) + "\" font-family=\"monospace\" font-size=\"11\">" +
           detail::fmt(yhi) + "</text>\n";

    if (std::isfinite(reference)) {
        out += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + detail::fmt(py(reference)) + "\" x2=\"" +
               std::to_string(w - mr) + "\" y2=\"" + detail::fmt(py(reference)) +
               "\" stroke=\"#999\" stroke-dasharray=\"6,4\"/>\n";
        out += "<text x=\"" + std::to_string(ml + 4) + "\" y=\"" + detail::fmt(py(reference) - 4) +
               "\" font-family=\"monospace\" font-size=\"11\" fill=\"#666\">" + ref_label + "</text>\n";
    }
    int ci = 0;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < xs.size(); ++i)
            pts += detail::fmt(px(xs[i])) + "," + detail::fmt(py(s.second[i])) + " ";
        out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colors[ci % 4] +
               "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i)
            out += "<circle cx=\"" + detail::fmt(px(xs[i])) + "\" cy=\"" + detail::fmt(py(s.second[i])) +
                   "\" r=\"3\" fill=\"" + colors[ci % 4] + "\"/>\n";
        out += "<text x=\"" + std::to_string(w - mr - 120) + "\" y=\"" + std::to_string(mt + 16 + 14 * ci) +
               "\" font-family=\"monospace\" font-size=\"11\" fill=\"" + colors[ci % 4] + "\">" + s.first +
               "</text>\n";
        ++ci;
    }
    out += "</svg>\n";
    return out;
}

} // namespace orblab
