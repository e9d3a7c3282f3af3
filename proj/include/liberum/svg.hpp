#pragma once

// Minimal line-chart writer. Plots only ever show series that are also
// written to CSV by the caller.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace liberum::svg {

struct Series {
  std::string label;
  std::vector<double> y;  // x is the index
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series) {
  constexpr double W = 720, H = 420, left = 70, right = 170, top = 40, bottom = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  std::size_t n = 1;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto px = [&](std::size_t i) { return left + (n > 1 ? pw * double(i) / double(n - 1) : 0.0); };
  const auto py = [&](double v) { return top + ph * (1.0 - (v - ymin) / (ymax - ymin)); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = ymin + (ymax - ymin) * k / 4.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  o << "<text x=\"" << left << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">0</text>\n";
  o << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << n - 1
    << "</text>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << x_label
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + ph / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* colour = palette[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].y.size(); ++i)
      if (std::isfinite(series[k].y[i])) o << fmt(px(i)) << ',' << fmt(py(series[k].y[i])) << ' ';
    o << "\"/>\n";
    const double ly = top + 16.0 * double(k);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly + 4 << "\">" << series[k].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace liberum::svg
