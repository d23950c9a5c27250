#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rodspec::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Static line plot with optional log axes; nonpositive values are dropped on
// log axes.
void write_line_plot(std::ostream& os, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool log_x, bool log_y);

}  // namespace rodspec::svg
