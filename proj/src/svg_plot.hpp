#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace issp::detail {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
};

// Line chart with axes, tick labels and a legend. Nonpositive values are
// dropped on a log axis.
void write_svg_plot(std::ostream& os, const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace issp::detail
