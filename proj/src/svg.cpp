#include "conslab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "conslab/format.hpp"

namespace conslab {

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void grow(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

}  // namespace

void write_line_chart(const std::vector<LineSeries>& series,
                      const ChartOptions& opts, std::ostream& out) {
  const int margin_left = 70, margin_right = 20, margin_top = 40,
            margin_bottom = 50;
  const double plot_w = opts.width - margin_left - margin_right;
  const double plot_h = opts.height - margin_top - margin_bottom;

  Range xr, yr;
  for (const LineSeries& s : series)
    for (auto [x, y] : s.points) {
      if (opts.log_y && y <= 0.0) continue;
      xr.grow(x);
      yr.grow(opts.log_y ? std::log10(y) : y);
    }
  if (!(xr.lo <= xr.hi) || !(yr.lo <= yr.hi)) {
    xr = {0.0, 1.0};
    yr = {0.0, 1.0};
  }
  if (xr.hi == xr.lo) xr.hi = xr.lo + 1.0;
  if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;

  auto px = [&](double x) {
    return margin_left + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  auto py = [&](double y) {
    const double value = opts.log_y ? std::log10(y) : y;
    return margin_top + plot_h - (value - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width
      << "\" height=\"" << opts.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << opts.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << opts.title << "</text>\n";

  // frame
  out << "<rect x=\"" << margin_left << "\" y=\"" << margin_top << "\" width=\""
      << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / ticks;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / ticks;
    const double gx = px(fx);
    const double gy = margin_top + plot_h - plot_h * t / ticks;
    out << "<line x1=\"" << gx << "\" y1=\"" << margin_top + plot_h
        << "\" x2=\"" << gx << "\" y2=\"" << margin_top + plot_h + 5
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << gx << "\" y=\"" << margin_top + plot_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt_double(fx) << "</text>\n";
    out << "<line x1=\"" << margin_left - 5 << "\" y1=\"" << gy << "\" x2=\""
        << margin_left << "\" y2=\"" << gy << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << margin_left - 8 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << (opts.log_y ? "1e" + fmt_double(fy) : fmt_double(fy)) << "</text>\n";
  }
  out << "<text x=\"" << margin_left + plot_w / 2 << "\" y=\""
      << opts.height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << opts.x_label << "</text>\n";
  out << "<text x=\"14\" y=\"" << margin_top + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 14 "
      << margin_top + plot_h / 2 << ")\">"
      << opts.y_label << "</text>\n";

  int legend_y = margin_top + 14;
  for (const LineSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (auto [x, y] : s.points) {
      if (opts.log_y && y <= 0.0) continue;
      out << (first ? "" : " ") << px(x) << ',' << py(y);
      first = false;
    }
    out << "\"/>\n";
    out << "<line x1=\"" << margin_left + plot_w - 150 << "\" y1=\""
        << legend_y << "\" x2=\"" << margin_left + plot_w - 126 << "\" y2=\""
        << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << margin_left + plot_w - 120 << "\" y=\""
        << legend_y + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

}  // namespace conslab
