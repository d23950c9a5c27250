#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rodspec/geometry.hpp"

namespace rodspec::cli {

// Parsed run configuration. Sections: [geometry], [coefficients], [mode],
// [solver], [output] and the optional [mvt]; unknown sections or keys are
// rejected with the offending line number.
struct Config {
  std::shared_ptr<geom::CellGeometry> geometry;
  geom::CoefficientSet coefficients;

  std::vector<int> n_cells_ladder;  // from n_cells or epsilon_ladder

  int beta = 1;
  int flatness_override = 0;

  double h = 1.0 / 64;
  double h_y = 1.0 / 16;
  double tol = 1e-9;
  std::uint64_t seed = 42;
  int j_max = 3;
  double truncation_L = 0.0;
  int grid_n = 0;
  int cell_slices = 9;
  std::vector<double> example1d_epsilons{1e-2, 4e-3, 1e-3};

  std::string output_dir = "out";
  bool svg = false;

  std::shared_ptr<const expr::Expr> mvt_w;  // default cos(2 pi y1)
  std::shared_ptr<const expr::Expr> mvt_v;  // default cos(pi x1)^2

  std::string raw_text;  // config echo for the manifest
};

Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

}  // namespace rodspec::cli
