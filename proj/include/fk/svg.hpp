#pragma once

#include <string>
#include <vector>

namespace fk {

enum class Marker { none, dot, star };

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;
  Marker marker = Marker::dot;
};

struct HLine {
  double y = 0.0;
  std::string label;
};

// Minimal self-contained line/scatter plot; no external assets.
std::string render_plot_svg(const std::string& title,
                            const std::string& x_label,
                            const std::string& y_label,
                            const std::vector<PlotSeries>& series,
                            const std::vector<HLine>& hlines = {});

}  // namespace fk
