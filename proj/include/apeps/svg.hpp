#pragma once

// Minimal SVG line charts for sweep results.

#include <optional>
#include <string>
#include <vector>

namespace apeps {

struct ChartPoint {
    double x = 0.0;
    double y = 0.0;
    std::optional<double> sd;  // drawn as an error bar
};

struct ChartSeries {
    std::string name;
    std::vector<ChartPoint> points;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
    int width = 640;
    int height = 420;
};

/// "Nice" tick values covering [lo, hi], roughly `target` of them.
std::vector<double> nice_ticks(double lo, double hi, int target = 5);

/// Self-contained SVG document. Non-finite points are skipped.
std::string render_svg(const LineChart& chart);

/// Escapes &, <, >, " for use in SVG text and attributes.
std::string xml_escape(const std::string& s);

}  // namespace apeps
