#include "spherelab/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace spherelab {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 460;
constexpr double kLeft = 80;
constexpr double kRight = 190;
constexpr double kTop = 40;
constexpr double kBottom = 60;
constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
  double fraction(double v) const { return (transform(v) - lo) / (hi - lo); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) out.push_back(std::pow(10.0, e));
      if (out.size() < 2) {
        out = {std::pow(10.0, lo), std::pow(10.0, hi)};
      }
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
      out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    }
    return out;
  }
};

Axis make_axis(bool log, double lo, double hi) {
  Axis axis;
  axis.log = log;
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    lo = log ? 1.0 : 0.0;
    hi = log ? 10.0 : 1.0;
  }
  axis.lo = axis.transform(lo);
  axis.hi = axis.transform(hi);
  if (axis.hi - axis.lo < 1e-12) {
    const double pad = log ? 0.5 : std::max(1.0, std::abs(axis.lo)) * 0.1;
    axis.lo -= pad;
    axis.hi += pad;
  } else if (!log) {
    const double pad = 0.05 * (axis.hi - axis.lo);
    axis.lo -= pad;
    axis.hi += pad;
  }
  return axis;
}

std::string tick_label(double v) { return fmt::format("{:.3g}", v); }

}  // namespace

std::string render_svg(const LineChart& chart) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double xlo = inf, xhi = -inf, ylo = inf, yhi = -inf;
  const Axis probe_x{0, 1, chart.log_x};
  const Axis probe_y{0, 1, chart.log_y};
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!probe_x.usable(s.x[i]) || !probe_y.usable(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  for (const auto& rule : chart.rules) {
    if (rule.vertical && probe_x.usable(rule.value)) {
      xlo = std::min(xlo, rule.value);
      xhi = std::max(xhi, rule.value);
    } else if (!rule.vertical && probe_y.usable(rule.value)) {
      ylo = std::min(ylo, rule.value);
      yhi = std::max(yhi, rule.value);
    }
  }
  if (chart.y_min < chart.y_max) {
    ylo = chart.y_min;
    yhi = chart.y_max;
  }
  const Axis ax = make_axis(chart.log_x, xlo, xhi);
  const Axis ay = make_axis(chart.log_y, ylo, yhi);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double v) { return kLeft + ax.fraction(v) * pw; };
  const auto py = [&](double v) { return kTop + (1.0 - ay.fraction(v)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     kLeft + pw / 2, escape(chart.title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n", kLeft,
      kTop, pw, ph);

  for (double t : ax.ticks()) {
    const double x = px(t);
    if (x < kLeft - 0.5 || x > kLeft + pw + 0.5) continue;
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
        x, kTop, kTop + ph, kTop + ph + 18, tick_label(t));
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    if (y < kTop - 0.5 || y > kTop + ph + 0.5) continue;
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, y, kLeft + pw, kLeft - 6, y + 4, tick_label(t));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 18, escape(chart.x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      kTop + ph / 2, escape(chart.y_label));

  for (const auto& rule : chart.rules) {
    if (rule.vertical) {
      if (!ax.usable(rule.value)) continue;
      const double x = px(rule.value);
      svg += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#777\" "
          "stroke-dasharray=\"2,3\"/>\n<text x=\"{3:.2f}\" y=\"{4}\" fill=\"#555\">{5}</text>\n",
          x, kTop, kTop + ph, x + 3, kTop + 12, escape(rule.label));
    } else {
      if (!ay.usable(rule.value)) continue;
      const double y = py(rule.value);
      svg += fmt::format(
          "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#777\" "
          "stroke-dasharray=\"2,3\"/>\n<text x=\"{3}\" y=\"{4:.2f}\" fill=\"#555\">{5}</text>\n",
          kLeft, y, kLeft + pw, kLeft + 4, y - 4, escape(rule.label));
    }
  }

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = kPalette[k % kPalette.size()];
    std::string points;
    std::string markers;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
      markers += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n",
                             px(s.x[i]), py(s.y[i]), color);
    }
    if (!s.markers_only && !points.empty()) {
      points.pop_back();
      svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{} points=\"{}\"/>\n",
                         color, s.dashed ? " stroke-dasharray=\"6,4\"" : "", points);
    }
    svg += markers;
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    const double lx = kLeft + pw + 14;
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"{4}/>\n"
        "<text x=\"{5}\" y=\"{6}\">{7}</text>\n",
        lx, ly, lx + 22, color, s.dashed ? " stroke-dasharray=\"6,4\"" : "", lx + 28, ly + 4,
        escape(s.label));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace spherelab
