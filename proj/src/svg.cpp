#include "apeps/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace apeps {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::array<const char*, 4> kDash = {"", "6,3", "2,3", "8,3,2,3"};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v, double step)
{
    char buf[32];
    const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
    std::snprintf(buf, sizeof buf, "%.*f", std::clamp(decimals, 0, 6), v);
    std::string s = buf;
    if (s == "-0")
        s = "0";
    return s;
}

}  // namespace

std::string xml_escape(const std::string& s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::vector<double> nice_ticks(double lo, double hi, int target)
{
    if (!std::isfinite(lo) || !std::isfinite(hi))
        return {};
    if (hi < lo)
        std::swap(lo, hi);
    if (hi == lo) {
        const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
        lo -= pad;
        hi += pad;
    }
    const double raw = (hi - lo) / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw)
            break;
    }
    std::vector<double> ticks;
    const double first = std::floor(lo / step + 1e-9) * step;
    for (double t = first; t <= hi + step * 0.5 + 1e-12; t += step) {
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
        if (ticks.size() > 50)
            break;
    }
    if (ticks.back() < hi)
        ticks.push_back(ticks.back() + step);
    return ticks;
}

std::string render_svg(const LineChart& chart)
{
    const double w = chart.width;
    const double h = chart.height;
    const double left = 70, right = 160, top = 40, bottom = 55;
    const double pw = w - left - right;
    const double ph = h - top - bottom;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = 0.0, ymax = -std::numeric_limits<double>::infinity();
    for (const auto& s : chart.series)
        for (const auto& p : s.points) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                continue;
            const double sd = p.sd && std::isfinite(*p.sd) ? *p.sd : 0.0;
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y - sd);
            ymax = std::max(ymax, p.y + sd);
        }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
    }
    if (!std::isfinite(ymax))
        ymax = 1.0;
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    const auto yt = nice_ticks(ymin, ymax);
    const double y0 = yt.front(), y1 = yt.back();
    const double ystep = yt.size() > 1 ? yt[1] - yt[0] : 1.0;

    std::vector<double> xt;
    for (const auto& s : chart.series)
        for (const auto& p : s.points)
            if (std::isfinite(p.x) && std::find(xt.begin(), xt.end(), p.x) == xt.end())
                xt.push_back(p.x);
    std::sort(xt.begin(), xt.end());
    if (xt.size() > 12 || xt.empty())
        xt = nice_ticks(xmin, xmax);
    double xstep = 1.0;
    for (std::size_t i = 1; i < xt.size(); ++i)
        xstep = std::min(xstep, xt[i] - xt[i - 1]);
    const double xpad = (xmax - xmin) * 0.04;
    const double xa = xmin - xpad, xb = xmax + xpad;

    auto sx = [&](double x) { return left + (x - xa) / (xb - xa) * pw; };
    auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\""
      << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(chart.title) << "</text>\n";

    for (double t : yt) {
        o << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(left + pw)
          << "\" y2=\"" << num(sy(t)) << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(t) + 4)
          << "\" text-anchor=\"end\">" << tick_label(t, ystep) << "</text>\n";
    }
    for (double t : xt) {
        if (t < xa || t > xb)
            continue;
        o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(t))
          << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + ph + 19)
          << "\" text-anchor=\"middle\">" << tick_label(t, xstep) << "</text>\n";
    }
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 12)
      << "\" text-anchor=\"middle\">" << xml_escape(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(chart.y_label) << "</text>\n";

    for (std::size_t i = 0; i < chart.series.size(); ++i) {
        const auto& s = chart.series[i];
        const char* colour = kPalette[i % kPalette.size()];
        const char* dash = kDash[(i / kPalette.size() + i) % kDash.size()];
        std::vector<ChartPoint> pts;
        for (const auto& p : s.points)
            if (std::isfinite(p.x) && std::isfinite(p.y))
                pts.push_back(p);
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x < b.x; });

        if (pts.size() > 1) {
            o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"";
            if (*dash)
                o << " stroke-dasharray=\"" << dash << '"';
            o << " points=\"";
            for (std::size_t j = 0; j < pts.size(); ++j)
                o << (j ? " " : "") << num(sx(pts[j].x)) << ',' << num(sy(pts[j].y));
            o << "\"/>\n";
        }
        for (const auto& p : pts) {
            if (p.sd && std::isfinite(*p.sd) && *p.sd > 0.0)
                o << "<line x1=\"" << num(sx(p.x)) << "\" y1=\"" << num(sy(p.y - *p.sd))
                  << "\" x2=\"" << num(sx(p.x)) << "\" y2=\"" << num(sy(p.y + *p.sd))
                  << "\" stroke=\"" << colour << "\"/>\n";
            o << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y))
              << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        }
        const double ly = top + 12 + 20.0 * static_cast<double>(i);
        o << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
          << num(left + pw + 36) << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour
          << "\" stroke-width=\"2\"";
        if (*dash)
            o << " stroke-dasharray=\"" << dash << '"';
        o << "/>\n";
        o << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4) << "\">"
          << xml_escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace apeps
