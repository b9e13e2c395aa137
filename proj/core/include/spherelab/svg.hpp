#pragma once

#include <string>
#include <vector>

namespace spherelab {

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  /// Draw only markers, no connecting line.
  bool markers_only = false;
};

/// A labelled reference line across the whole plot.
struct ChartRule {
  double value = 0.0;
  std::string label;
  /// Vertical (at an x value) or horizontal (at a y value).
  bool vertical = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<ChartSeries> series;
  std::vector<ChartRule> rules;
  /// Fixed y range; computed from the data when y_min >= y_max.
  double y_min = 0.0;
  double y_max = 0.0;
};

/// Standalone SVG document: axes with ticks, one polyline per series, rules
/// and a legend. Non-finite points (and non-positive ones on log axes) are skipped.
std::string render_svg(const LineChart& chart);

}  // namespace spherelab
