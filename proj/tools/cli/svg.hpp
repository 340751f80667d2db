#pragma once

// Minimal static SVG scatter plots. Coordinates are printed with fixed
// precision so identical inputs give identical files.

#include <string>
#include <vector>

namespace pacf::cli {

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int group = 0;  // picks the fill colour
};

struct ScatterPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> notes;  // lines printed in the top-left corner
  std::string description;         // stored in <desc>
  std::vector<ScatterPoint> points;
};

std::string render_svg(const ScatterPlot& plot);

}  // namespace pacf::cli
