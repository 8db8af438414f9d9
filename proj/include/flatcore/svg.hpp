#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flatcore {

// Minimal standalone SVG line/scatter plot on log-log axes with decade
// ticks; `fit` overlays the line log y = intercept + slope log x.
struct LogLogPlot {
  std::string title, xlabel, ylabel;
  std::vector<std::pair<double, double>> points;  // x, y > 0
  std::optional<std::pair<double, double>> fit;   // slope, intercept (natural logs)
};

void write_svg_loglog(const std::string& path, const LogLogPlot& plot);

}  // namespace flatcore
