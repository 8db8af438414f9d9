#include "flatcore/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "flatcore/csv.hpp"

namespace flatcore {

namespace {

constexpr double W = 640, H = 480;
constexpr double ML = 70, MR = 20, MT = 40, MB = 55;  // margins

struct Axis {
  double lo, hi;  // log10 range, padded to whole decades
  double map(double v, double pix_lo, double pix_hi) const {
    return pix_lo + (std::log10(v) - lo) / (hi - lo) * (pix_hi - pix_lo);
  }
};

Axis make_axis(double vmin, double vmax) {
  Axis ax;
  ax.lo = std::floor(std::log10(vmin) - 1e-9);
  ax.hi = std::ceil(std::log10(vmax) + 1e-9);
  if (ax.hi <= ax.lo) ax.hi = ax.lo + 1.0;
  return ax;
}

std::string num(double v) { return fmt_g17(v); }

}  // namespace

void write_svg_loglog(const std::string& path, const LogLogPlot& plot) {
  if (plot.points.empty()) throw std::invalid_argument("svg: no points to plot");
  double xmin = 1e300, xmax = 0, ymin = 1e300, ymax = 0;
  for (const auto& [x, y] : plot.points) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("svg: log-log plot needs positive data");
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const Axis ax = make_axis(xmin, xmax), ay = make_axis(ymin, ymax);
  auto px = [&](double x) { return ax.map(x, ML, W - MR); };
  auto py = [&](double y) { return ay.map(y, H - MB, MT); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("svg: cannot open " + path + " for writing");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

  // frame and decade grid
  out << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << W - ML - MR << "\" height=\""
      << H - MT - MB << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(ax.lo); d <= static_cast<int>(ax.hi); ++d) {
    const double x = px(std::pow(10.0, d));
    out << "<line x1=\"" << x << "\" y1=\"" << MT << "\" x2=\"" << x << "\" y2=\"" << H - MB
        << "\" stroke=\"#cccccc\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << H - MB + 18
        << "\" font-size=\"12\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(ay.lo); d <= static_cast<int>(ay.hi); ++d) {
    const double y = py(std::pow(10.0, d));
    out << "<line x1=\"" << ML << "\" y1=\"" << y << "\" x2=\"" << W - MR << "\" y2=\"" << y
        << "\" stroke=\"#cccccc\"/>\n"
        << "<text x=\"" << ML - 6 << "\" y=\"" << y + 4
        << "\" font-size=\"12\" text-anchor=\"end\">1e" << d << "</text>\n";
  }

  // fitted line clipped to the frame's x-range
  if (plot.fit) {
    const auto [slope, intercept] = *plot.fit;
    const double xa = std::pow(10.0, ax.lo), xb = std::pow(10.0, ax.hi);
    const double ya = std::exp(intercept + slope * std::log(xa));
    const double yb = std::exp(intercept + slope * std::log(xb));
    out << "<line x1=\"" << px(xa) << "\" y1=\"" << py(ya) << "\" x2=\"" << px(xb) << "\" y2=\""
        << py(yb) << "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }

  // data markers connected in x order
  std::vector<std::pair<double, double>> pts = plot.points;
  std::sort(pts.begin(), pts.end());
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
  for (const auto& [x, y] : pts) out << px(x) << "," << py(y) << " ";
  out << "\"/>\n";
  for (const auto& [x, y] : pts)
    out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
        << "\" r=\"3.5\" fill=\"#1f77b4\"/>\n";

  out << "<text x=\"" << W / 2 << "\" y=\"" << MT - 14
      << "\" font-size=\"15\" text-anchor=\"middle\">" << plot.title << "</text>\n"
      << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
      << "\" font-size=\"13\" text-anchor=\"middle\">" << plot.xlabel << "</text>\n"
      << "<text x=\"16\" y=\"" << H / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2
      << ")\">" << plot.ylabel << "</text>\n";
  if (plot.fit)
    out << "<text x=\"" << W - MR - 8 << "\" y=\"" << MT + 18
        << "\" font-size=\"12\" text-anchor=\"end\" fill=\"#d62728\">slope " << num(plot.fit->first)
        << "</text>\n";
  out << "</svg>\n";
  if (!out) throw std::runtime_error("svg: write failure on " + path);
}

}  // namespace flatcore
