#pragma once

#include <string>
#include <vector>

namespace sciml {

struct SvgSeries {
  std::string label;
  std::vector<double> xs, ys;
  std::string color = "#1f6fb2";
  bool dashed = false;
};

/// Polyline line chart in a fixed 800x500 viewBox with axis ticks and a
/// legend. `log_y` plots log10 of the values (non-positive points dropped).
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series, bool log_y = false);

}  // namespace sciml
