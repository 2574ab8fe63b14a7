#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace conslab {

struct LineSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 440;
};

// Minimal self-contained SVG line chart (axes, ticks, legend, polylines).
void write_line_chart(const std::vector<LineSeries>& series,
                      const ChartOptions& opts, std::ostream& out);

}  // namespace conslab
