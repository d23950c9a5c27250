#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rodspec/cell_problem.hpp"
#include "rodspec/direct.hpp"
#include "rodspec/effective.hpp"
#include "rodspec/geometry.hpp"

namespace rodspec::asym {

// nu = eps^{2/(k+2)} (lambda - floor/eps) for beta = 1 (k = flatness order),
// nu = eps (lambda - floor/eps^2) for beta = 2, lambda unchanged for beta = 0.
double rescale_eigenvalue(double lambda, double epsilon, double floor_value, int beta,
                          int flatness_order = 2);

// Normalized localization error
//   E = 1/(eps^gamma eps^{d-1} |Q|) \int_{Omega_eps} |u - v((x1-x1_min)/eps^gamma)|^2
// by element-midpoint quadrature. `modulation` (optional, vertex field on a
// cell mesh with its locator) multiplies v by p1(0, x/eps) for beta = 2.
double localization_error(const mesh::TriMesh& rod_mesh, const std::vector<double>& u,
                          const effective::EffectiveEigenPair& v_eff, double epsilon,
                          double gamma, double x1_min, double q_measure);

// ||u||_{L2 outside |x1 - x1_min| < delta} / ||u||_{L2(Omega_eps)}.
double concentration_mass(const mesh::TriMesh& rod_mesh, const std::vector<double>& u,
                          double x1_min, double delta);

// P1 evaluation at arbitrary cell points through a uniform-bin triangle
// locator (nearest-element fallback for points off the mesh).
class CellPointLocator {
 public:
  CellPointLocator(const mesh::TriMesh& cell_mesh, const std::vector<double>& vertex_values);
  double value_at(double y1, double y2) const;

 private:
  const mesh::TriMesh& mesh_;
  std::vector<double> values_;
  double w_ = 0.5;
  int nb_ = 1;
  std::vector<std::vector<int>> bins_;
};

// Localization error against the beta=2 approximation p1(0, x/eps) v(x1/sqrt(eps)).
double localization_error_beta2(const mesh::TriMesh& rod_mesh, const std::vector<double>& u,
                                const effective::EffectiveEigenPair& v_eff,
                                const CellPointLocator& p1, double epsilon, double x1_min,
                                double q_measure);

struct MvtResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double bound_ratio = 0.0;  // residual / (eps ||v|| ||grad v||)
  double norm_v = 0.0;
  double norm_grad_v = 0.0;
};

// Mean-value check of Lemma-type replacement of an oscillating coefficient by
// its cell average inside a quadratic form: compares
//   \int_{Omega_eps} w(x1, x/eps) v(x1)^2  against
//   1/|box| \int_{G_eps} (\int_{Y(x1_j)} w dy) v(x1)^2,
// with the inner integral precomputed per cell slice on the same cut cell
// meshes, all by a degree-5 triangle rule.
MvtResult mean_value_residual(const std::shared_ptr<const geom::CellGeometry>& geometry,
                              const expr::Expr& w_field, const expr::Expr& v_profile,
                              const geom::RodGeometry& rod, double h_y);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares on (log eps, log value); all values must be positive.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct SweepConfig {
  std::shared_ptr<const geom::CellGeometry> geometry;
  geom::CoefficientSet coefficients;
  std::vector<int> n_cells_ladder;  // eps = 1/(2N+1) per entry
  int beta = 1;
  int j_max = 3;
  double h = 1.0 / 64;    // cell mesh size
  double h_y = 1.0 / 16;  // per-cell rod mesh size
  double tol = 1e-9;
  std::uint64_t seed = 42;
  int threads = 1;
  int sl_grid_n = 2048;       // beta=0 effective grid
  int flatness_override = 0;  // 0 = detected
  int profile_slices = 33;    // beta=0 a_eff(x1) sampling
};

// Effective-problem data for a given mode: the minimum profile, the cell
// coefficient, the floor value subtracted in the rescaling, the localization
// exponent gamma and the effective eigenpairs.
struct EffectiveSummary {
  geom::PotentialProfile profile;
  double a_eff = 0.0;
  double floor_value = 0.0;
  double gamma = 0.25;
  int flatness = 2;
  std::vector<effective::EffectiveEigenPair> pairs;
  std::string notes;
};

EffectiveSummary effective_pairs_for(const SweepConfig& config);

struct SweepRow {
  double epsilon = 0.0;
  int j = 0;
  double lambda = 0.0;
  double nu_eps = 0.0;
  double nu_eff = 0.0;
  double loc_err = 0.0;
  double mass_d01 = 0.0;
  double mass_d02 = 0.0;
  double gap = 0.0;
  double h_y = 0.0;
  std::uint64_t seed = 0;
  double nu_two_route = 0.0;  // rescaled-operator consistency value (beta=1)
  bool ok = true;
  std::string error;
};

struct SweepReport {
  int beta = 1;
  std::vector<SweepRow> rows;  // sorted by (eps desc, j asc)
  geom::PotentialProfile profile;
  double a_eff = 0.0;
  double floor_value = 0.0;  // cbar(x1_min), or lambda1(0) for beta=2
  std::vector<double> nu_eff;
  std::vector<RateFit> nu_err_fits;  // per j: |nu_eps - nu_eff| vs eps
  RateFit floor_gap_fit;             // |lambda_1 - floor/eps^beta| vs eps
  double max_two_route_mismatch = 0.0;
  std::string notes;

  // Fixed schema: epsilon,j,lambda,nu_eps,nu_eff,loc_err,mass_d01,mass_d02,gap,h_y,seed
  void write_csv(std::ostream& os) const;
};

SweepReport run_sweep(const SweepConfig& config);

}  // namespace rodspec::asym
