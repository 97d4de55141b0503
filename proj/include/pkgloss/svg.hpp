#pragma once

// Bare-bones SVG plots: stacked-free bar chart, line charts with optional log axes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pkgloss/errors.hpp"
#include "pkgloss/io/csv.hpp"

namespace pkgloss::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotOptions {
  std::string title;
  std::string x_label, y_label;
  bool log_x = false, log_y = false;
  int width = 640, height = 420;
  std::optional<std::string> timestamp;  // written as a comment when set
};

namespace detail {

inline std::string esc(std::string_view s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline const char* colour(std::size_t k) {
  static const char* c[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return c[k % 7];
}

inline std::string num(double v) { return io::format_double(std::round(v * 100.0) / 100.0); }

inline void open(std::ostringstream& o, const PlotOptions& p) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height << "\">\n";
  if (p.timestamp) o << "<!-- generated " << esc(*p.timestamp) << " -->\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!p.title.empty())
    o << "<text x=\"" << p.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(p.title)
      << "</text>\n";
}

}  // namespace detail

/// One bar per label, height = value. Values must be non-negative.
inline std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                             const PlotOptions& p = {}) {
  if (labels.size() != values.size() || labels.empty()) throw DomainError("bar chart needs matching labels and values");
  double vmax = 0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("bar values must be finite and non-negative");
    vmax = std::max(vmax, v);
  }
  if (vmax == 0.0) vmax = 1.0;
  const double l = 70, r = 20, t = 40, b = 60;
  const double pw = p.width - l - r, ph = p.height - t - b;
  const double slot = pw / labels.size();
  std::ostringstream o;
  detail::open(o, p);
  o << "<line x1=\"" << l << "\" y1=\"" << t + ph << "\" x2=\"" << l + pw << "\" y2=\"" << t + ph
    << "\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double h = ph * values[k] / vmax;
    const double x = l + slot * k + slot * 0.15;
    o << "<rect x=\"" << detail::num(x) << "\" y=\"" << detail::num(t + ph - h) << "\" width=\""
      << detail::num(slot * 0.7) << "\" height=\"" << detail::num(h) << "\" fill=\"" << detail::colour(k) << "\"/>\n";
    o << "<text x=\"" << detail::num(x + slot * 0.35) << "\" y=\"" << detail::num(t + ph + 16)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::esc(labels[k]) << "</text>\n";
    o << "<text x=\"" << detail::num(x + slot * 0.35) << "\" y=\"" << detail::num(t + ph - h - 4)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << io::format_double(values[k]) << "</text>\n";
  }
  if (!p.y_label.empty())
    o << "<text x=\"14\" y=\"" << t + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << t + ph / 2
      << ")\" text-anchor=\"middle\">" << detail::esc(p.y_label) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

/// Polylines for each series, shared axes. Non-positive points are dropped on log axes.
inline std::string line_chart(const std::vector<Series>& series, const PlotOptions& p = {}) {
  if (series.empty()) throw DomainError("line chart needs at least one series");
  auto tx = [&](double v) { return p.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!p.log_x || x > 0) && (!p.log_y || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DomainError("series '" + s.label + "' has mismatched x and y");
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!usable(s.x[k], s.y[k])) continue;
      x0 = std::min(x0, tx(s.x[k]));
      x1 = std::max(x1, tx(s.x[k]));
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  }
  if (!std::isfinite(x0)) throw DomainError("line chart has no plottable points");
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double l = 70, r = 120, t = 40, b = 50;
  const double pw = p.width - l - r, ph = p.height - t - b;
  auto px = [&](double v) { return l + pw * (tx(v) - x0) / (x1 - x0); };
  auto py = [&](double v) { return t + ph * (1.0 - (ty(v) - y0) / (y1 - y0)); };

  std::ostringstream o;
  detail::open(o, p);
  o << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto tick = [&](double v, bool log) { return io::format_double(log ? std::pow(10.0, v) : v); };
  o << "<text x=\"" << l << "\" y=\"" << t + ph + 16 << "\" font-size=\"10\">" << tick(x0, p.log_x) << "</text>\n";
  o << "<text x=\"" << l + pw << "\" y=\"" << t + ph + 16 << "\" font-size=\"10\" text-anchor=\"end\">"
    << tick(x1, p.log_x) << "</text>\n";
  o << "<text x=\"" << l - 4 << "\" y=\"" << t + ph << "\" font-size=\"10\" text-anchor=\"end\">" << tick(y0, p.log_y)
    << "</text>\n";
  o << "<text x=\"" << l - 4 << "\" y=\"" << t + 10 << "\" font-size=\"10\" text-anchor=\"end\">" << tick(y1, p.log_y)
    << "</text>\n";
  if (!p.x_label.empty())
    o << "<text x=\"" << l + pw / 2 << "\" y=\"" << p.height - 12 << "\" font-size=\"12\" text-anchor=\"middle\">"
      << detail::esc(p.x_label) << "</text>\n";
  if (!p.y_label.empty())
    o << "<text x=\"14\" y=\"" << t + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << t + ph / 2
      << ")\" text-anchor=\"middle\">" << detail::esc(p.y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    o << "<polyline fill=\"none\" stroke=\"" << detail::colour(s) << "\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < series[s].x.size(); ++k) {
      if (!usable(series[s].x[k], series[s].y[k])) continue;
      o << (first ? "" : " ") << detail::num(px(series[s].x[k])) << "," << detail::num(py(series[s].y[k]));
      first = false;
    }
    o << "\"/>\n";
    o << "<text x=\"" << l + pw + 8 << "\" y=\"" << t + 14 + 16 * s << "\" font-size=\"11\" fill=\""
      << detail::colour(s) << "\">" << detail::esc(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace pkgloss::svg
