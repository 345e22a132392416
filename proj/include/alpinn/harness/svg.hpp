#pragma once

#include <string>
#include <vector>

namespace alpinn::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;  // optional symmetric error bars
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string note;  // small caption under the plot
  bool log_x = false;
  bool log_y = true;
  bool markers = false;
  std::vector<Series> series;
};

/// Self-contained SVG; points that are NaN or not positive on a log axis are skipped.
/// Throws std::invalid_argument when no series has a plottable point.
std::string render_line_chart(const LineChart& chart);

struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string value_label;
  std::vector<double> x;      // one entry per cell
  std::vector<double> y;      // one entry per cell
  std::vector<double> value;  // one entry per cell
};

/// One <rect class="cell"> per distinct (x, y) pair plus a gradient legend.
std::string render_heatmap(const Heatmap& map);

}  // namespace alpinn::harness
