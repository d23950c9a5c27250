#include "rodspec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace rodspec::svg {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_line_plot(std::ostream& os, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool log_x, bool log_y) {
  const double width = 800, height = 560;
  const double ml = 80, mr = 30, mt = 50, mb = 60;

  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((log_x && s.x[i] <= 0) || (log_y && s.y[i] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x0 < x1)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (!(y0 < y1)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  double dx = x1 - x0, dy = y1 - y0;
  x0 -= 0.05 * dx;
  x1 += 0.05 * dx;
  y0 -= 0.05 * dy;
  y1 += 0.05 * dy;

  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (width - ml - mr); };
  auto py = [&](double v) { return height - mb - (ty(v) - y0) / (y1 - y0) * (height - mt - mb); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
     << title << "</text>\n";

  // Axes box and ticks.
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
     << "\" height=\"" << height - mt - mb
     << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    double fx = x0 + (x1 - x0) * i / ticks;
    double fy = y0 + (y1 - y0) * i / ticks;
    double gx = ml + (width - ml - mr) * i / ticks;
    double gy = height - mb - (height - mt - mb) * i / ticks;
    double label_x = log_x ? std::pow(10.0, fx) : fx;
    double label_y = log_y ? std::pow(10.0, fy) : fy;
    os << "<line x1=\"" << gx << "\" y1=\"" << height - mb << "\" x2=\"" << gx << "\" y2=\""
       << height - mb + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << gx << "\" y=\"" << height - mb + 20
       << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(label_x) << "</text>\n";
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(label_y) << "</text>\n";
  }
  os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 15
     << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (mt + height - mb) / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if ((log_x && series[s].x[i] <= 0) || (log_y && series[s].y[i] <= 0)) continue;
      os << fmt(px(series[s].x[i])) << "," << fmt(py(series[s].y[i])) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << width - mr - 150 << "\" y=\"" << mt + 18 + 16 * s
       << "\" font-size=\"12\" fill=\"" << color << "\">" << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace rodspec::svg
