#include "sciml/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sciml {

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 70, kRight = 20, kTop = 45, kBottom = 55;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<SvgSeries>& series, bool log_y) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const SvgSeries& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      double y = s.ys[i];
      if (log_y) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (!std::isfinite(s.xs[i]) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
         "font-family=\"sans-serif\" font-size=\"13\">\n";
  svg += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  svg += "<text x=\"400\" y=\"25\" text-anchor=\"middle\" font-size=\"17\">" +
         esc(title) + "</text>\n";

  // frame + ticks
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  const int nticks = 6;
  for (int i = 0; i < nticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / (nticks - 1.0);
    const double fy = ymin + (ymax - ymin) * i / (nticks - 1.0);
    svg += "<line x1=\"" + num(sx(fx)) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" +
           num(sx(fx)) + "\" y2=\"" + num(kTop + ph + 5) + "\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(kTop + ph + 20) +
           "\" text-anchor=\"middle\">" + num(fx) + "</text>\n";
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(sy(fy)) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(sy(fy)) + "\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + num(kLeft - 9) + "\" y=\"" + num(sy(fy) + 4) +
           "\" text-anchor=\"end\">" + num(fy) + "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" text-anchor=\"middle\">" + esc(x_label) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + num(kTop + ph / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num(kTop + ph / 2) +
         ")\">" + esc(log_y ? "log10(" + y_label + ")" : y_label) + "</text>\n";

  // series
  for (const SvgSeries& s : series) {
    std::string pts;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      double y = s.ys[i];
      if (log_y) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (!std::isfinite(s.xs[i]) || !std::isfinite(y)) continue;
      pts += num(sx(s.xs[i])) + "," + num(sy(y)) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.8\"" +
           (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
  }

  // legend
  double ly = kTop + 12;
  for (const SvgSeries& s : series) {
    const double lx = kLeft + pw - 170;
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(lx + 26) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") +
           "/>\n";
    svg += "<text x=\"" + num(lx + 32) + "\" y=\"" + num(ly) + "\">" + esc(s.label) +
           "</text>\n";
    ly += 18;
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace sciml
