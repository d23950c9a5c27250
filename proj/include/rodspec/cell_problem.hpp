#pragma once

#include <cstdint>
#include <vector>

#include "rodspec/eigensolve.hpp"
#include "rodspec/fem.hpp"
#include "rodspec/mesh.hpp"

namespace rodspec::cell {

struct SolverOptions {
  double tol = 1e-9;
  std::uint64_t seed = 42;
};

// Periodic cell corrector N_k, gauged to zero mean over Y.
struct CorrectorField {
  int axis = 1;
  std::vector<double> vertex_values;
};

// Effective matrix at a slice, computed by the energy form (symmetric PSD by
// construction); the flux form is kept as a cross-check.
struct EffectiveMatrix {
  double x1_slice = 0.0;
  double A[2][2] = {{0, 0}, {0, 0}};
  double a_eff = 0.0;  // A[0][0]
  double form_discrepancy = 0.0;
  double cell_area = 0.0;
  double norm() const;
};

// Principal cell eigenpair for the beta=2 scaling.
struct CellEigenData {
  double x1_slice = 0.0;
  double lambda1 = 0.0;
  double gap_to_second = 0.0;
  std::vector<double> p1;  // vertex values, positive, \int p1^2 = |Y|
  double lambda1_curvature = 0.0;
  bool positivity_ok = true;
};

struct Beta2Effective {
  double a_eff_w = 0.0;   // weighted effective coefficient
  double c_eff = 0.0;     // first-order drift correction
  double lambda1_0 = 0.0;
  double lambda1_curvature = 0.0;
};

// Cell mesh with periodic dofs and both correctors solved.
struct CellSolution {
  mesh::TriMesh cell_mesh;
  fem::DofMap dofs;
  CorrectorField n1, n2;
  EffectiveMatrix effective;
};

CellSolution solve_cell(const std::shared_ptr<const geom::CellGeometry>& geometry,
                        const geom::CoefficientSet& coefficients, double x1, double h);

// Corrector along one axis on a prebuilt periodic cell system.
CorrectorField solve_corrector(const mesh::TriMesh& cell_mesh, const fem::DofMap& dofs,
                               const fem::SparseMatrix& K,
                               const geom::CoefficientSet& coefficients, double x1,
                               int axis);
CorrectorField solve_corrector(const std::shared_ptr<const geom::CellGeometry>& geometry,
                               const geom::CoefficientSet& coefficients, double x1, double h,
                               int axis);

EffectiveMatrix effective_matrix(const std::shared_ptr<const geom::CellGeometry>& geometry,
                                 const geom::CoefficientSet& coefficients, double x1,
                                 double h);

CellEigenData solve_cell_eigen(const std::shared_ptr<const geom::CellGeometry>& geometry,
                               const geom::CoefficientSet& coefficients, double x1, double h,
                               const SolverOptions& options = {});

// Second derivative of lambda_1(x1) at x1 = 0 by a 5-point central difference
// (each slice solved on its own mesh).
double lambda1_curvature(const std::shared_ptr<const geom::CellGeometry>& geometry,
                         const geom::CoefficientSet& coefficients, double h, double step,
                         const SolverOptions& options = {});

// Weighted corrector, weighted effective coefficient and drift correction for
// the beta=2 scaling. The x1-derivatives of p1 and a use central differences
// with step `delta` on the x1=0 mesh.
Beta2Effective beta2_effective(const std::shared_ptr<const geom::CellGeometry>& geometry,
                               const geom::CoefficientSet& coefficients, double h,
                               double delta = 1e-3, double curvature_step = 0.05,
                               const SolverOptions& options = {});

// Solves the singular periodic system K x = b (constants in the kernel) by
// pinning one dof, then removes the Y-weighted mean. The right-hand side must
// be compatible to 1e-8 relative.
std::vector<double> solve_singular_pinned(const fem::SparseMatrix& K,
                                          const std::vector<double>& b);

}  // namespace rodspec::cell
