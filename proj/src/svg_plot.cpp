#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace issp::detail {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_svg_plot(std::ostream& os, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    auto usable = [&](double v) { return std::isfinite(v) && (!spec.log_y || v > 0.0); };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
            if (!usable(s.y[k]) || !std::isfinite(s.x[k])) {
                continue;
            }
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    }
    if (!(x0 <= x1)) {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if (x1 == x0) {
        x1 = x0 + 1.0;
    }
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\">" << escape(spec.title)
       << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int t = 0; t <= 4; ++t) {
        const double xv = x0 + (x1 - x0) * t / 4.0;
        const double yv = y0 + (y1 - y0) * t / 4.0;
        os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(kTop + ph + 16)
           << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        os << "<text x=\"" << fmt(kLeft - 6) << "\" y=\"" << fmt(py(yv) + 4)
           << "\" text-anchor=\"end\">" << (spec.log_y ? "1e" + fmt(yv) : fmt(yv)) << "</text>\n";
        os << "<line x1=\"" << fmt(kLeft) << "\" x2=\"" << fmt(kLeft + pw) << "\" y1=\""
           << fmt(py(yv)) << "\" y2=\"" << fmt(py(yv)) << "\" stroke=\"#ddd\"/>\n";
    }
    os << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 12)
       << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << fmt(kTop + ph / 2) << "\" transform=\"rotate(-90 16 "
       << fmt(kTop + ph / 2) << ")\" text-anchor=\"middle\">"
       << escape(spec.y_label + (spec.log_y ? " (log)" : "")) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        const auto& ser = series[s];
        // Thin long series to at most ~2000 points.
        const std::size_t stride = std::max<std::size_t>(1, ser.x.size() / 2000);
        for (std::size_t k = 0; k < ser.x.size() && k < ser.y.size(); k += stride) {
            if (!usable(ser.y[k])) {
                continue;
            }
            os << fmt(px(ser.x[k])) << ',' << fmt(py(ty(ser.y[k]))) << ' ';
        }
        os << "\"/>\n";
        const double ly = kTop + 14.0 + 16.0 * static_cast<double>(s);
        os << "<line x1=\"" << fmt(kLeft + pw + 10) << "\" x2=\"" << fmt(kLeft + pw + 30)
           << "\" y1=\"" << fmt(ly) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt(kLeft + pw + 34) << "\" y=\"" << fmt(ly + 4) << "\">"
           << escape(ser.label) << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace issp::detail
