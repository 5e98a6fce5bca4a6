#pragma once

#include <string>
#include <vector>

namespace topodsgd::tools {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // non-positive points are dropped on a log axis
  int width = 640;
  int height = 400;
};

// Polyline chart with one line per series and a legend.
std::string render_svg(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace topodsgd::tools
