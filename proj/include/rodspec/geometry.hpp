#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rodspec/expr.hpp"

namespace rodspec::geom {

// Cross-section Q = (-half_width, half_width) of the rod; |Q| = 2*half_width.
struct CrossSection {
  double half_width = 0.5;
  double measure() const { return 2.0 * half_width; }
};

// Reduces a periodic coordinate into [-1/2, 1/2).
inline double reduce_periodic(double y1) { return y1 - std::floor(y1 + 0.5); }

// Periodicity cell (torus in y1) x (-w, w) with a hole {F <= 0} per slice x1.
// The level set is evaluated with y1 reduced mod 1, so periodicity holds by
// construction. hole_present=false means the full cell (no level set).
struct CellGeometry {
  std::shared_ptr<const expr::Expr> level_set;  // null when hole_present=false
  CrossSection cross_section;
  bool hole_present = false;

  double level_set_at(double x1, double y1, double y2) const;
};

// Thin rod of length 1 with cross-section eps*Q and eps = 1/(2*N_cells+1),
// the admissible sequence that tiles I with an odd number of whole cells.
struct RodGeometry {
  explicit RodGeometry(int n_cells);
  int n_cells;
  double epsilon;
};

// Symmetric 2x2 coefficient matrix a (a21 mirrors a12) and potential c.
struct CoefficientSet {
  std::shared_ptr<const expr::Expr> a11, a12, a22;
  std::shared_ptr<const expr::Expr> c;
  double ellipticity_floor = 0.0;  // Lambda_0

  // Evaluates a at (x1, y); result {a11, a12, a22}.
  struct Mat2 {
    double a11, a12, a22;
    double min_eigenvalue() const;
  };
  Mat2 a_at(double x1, double y1, double y2) const;
  double c_at(double x1, double y1, double y2) const;
};

// Location and local shape of the minimum of the averaged potential cbar.
struct PotentialProfile {
  double x1_min = 0.0;
  double cbar_min = 0.0;
  double cbar_curvature = 0.0;    // second derivative at the minimum
  int flatness_order = 2;        // first non-vanishing even derivative order
  double kth_derivative = 0.0;   // value of that derivative (== curvature for k=2)
  bool boundary_min = false;
};

struct HypothesisCheck {
  std::string name;
  bool passed;
  std::string detail;  // witness point on failure
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;
  bool all_passed() const;
  std::string to_string() const;
};

// Indicator of the perforated cell: 1 iff F(x1, y) > 0 (1 everywhere when
// there is no hole). Boundary points F = 0 count as outside the material.
int chi(const CellGeometry& geometry, double x1, double y1, double y2);

// Midpoint-rule measure of {F > 0} on a quad_n x quad_n grid over the cell.
double cell_measure(const CellGeometry& geometry, double x1, int quad_n);

// Average of c over the perforated cell Y(x1) by the same midpoint rule.
double cbar(const CellGeometry& geometry, const CoefficientSet& coefficients,
            double x1, int quad_n);

struct MinimizeOptions {
  int scan_points = 1024;
  int quad_n = 256;
  double x1_tol = 1e-10;
};

// Locates the global minimum of cbar over I = [-1/2, 1/2] by dense scan plus
// golden-section refinement, measures the curvature by central differences,
// and detects the flatness order of the minimum.
PotentialProfile minimize_cbar(const CellGeometry& geometry,
                               const CoefficientSet& coefficients,
                               const MinimizeOptions& options = {});

struct ValidateOptions {
  int grid_n = 64;       // samples per axis
  int quad_n = 256;      // quadrature for the cbar scan
  bool require_positive_c = true;   // drop for the bounded-potential mode
  bool require_cbar_minimum = true; // (H3); not needed for beta = 0
};

// Sampled pass/fail report for (H1)-(H3) plus the level-set conditions.
HypothesisReport validate_hypotheses(const CellGeometry& geometry,
                                     const CoefficientSet& coefficients,
                                     const ValidateOptions& options = {});

}  // namespace rodspec::geom
