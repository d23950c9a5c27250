#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rodspec/effective.hpp"
#include "rodspec/eigensolve.hpp"
#include "rodspec/fem.hpp"
#include "rodspec/mesh.hpp"

namespace rodspec::direct {

struct DirectOptions {
  double tol = 1e-9;
  std::uint64_t seed = 42;
  // Localization exponent gamma (eps^gamma scale); beta/(k+2) with k=2 by
  // default. Sets the normalization target eps^gamma * eps^{d-1} * |Q|.
  std::optional<double> gamma;
  // cbar minimum for the shift sigma0 = 0.9 * cbar_min / eps^beta; computed
  // from the geometry when absent.
  std::optional<double> cbar_min;
  // When given, eigenvector signs align against these effective
  // eigenfunctions evaluated at (x1 - x1_min)/eps^gamma.
  const std::vector<effective::EffectiveEigenPair>* align_to = nullptr;
  double x1_min = 0.0;
};

// Spectrum of the eps-dependent rod problem for beta in {0, 1, 2}.
struct DirectSpectrum {
  double epsilon = 0.0;
  int beta = 1;
  std::vector<double> lambdas;
  std::vector<std::vector<double>> vertex_vectors;  // post-scaled
  std::vector<double> residuals;
  double normalization_target = 1.0;  // enforced value of \int u^2
  double shift_used = 0.0;
  std::uint64_t seed = 0;
  bool floor_ok = true;  // lambda_1 > min c / eps^beta (beta > 0)
  double floor_value = 0.0;

  mesh::TriMesh rod_mesh;
  fem::DofMap dofs;
};

// Midpoint-quadrature L2 norm squared of a P1 vertex field; this is the
// discrete norm used for normalization, localization and concentration so
// the normalization identities hold exactly.
double midpoint_l2_sq(const mesh::TriMesh& m, const std::vector<double>& vertex_values);

DirectSpectrum solve_direct(const std::shared_ptr<const geom::CellGeometry>& geometry,
                            const geom::CoefficientSet& coefficients,
                            const geom::RodGeometry& rod, int beta, int j_max, double h_y,
                            const DirectOptions& options = {});

// Eigenvalues of the rescaled operator assembled directly on the z = x /
// eps^{1/4} mesh (consistency route for nu; beta = 1 only).
std::vector<double> solve_rescaled_nu(const DirectSpectrum& spectrum,
                                      const geom::CoefficientSet& coefficients, double cbar0,
                                      int count, const DirectOptions& options = {});

// The explicit one-dimensional example: -u'' + (1+x^2)/eps u = lambda u on
// (-1, 1) with Dirichlet ends, solved by 3-point finite differences on n
// interior nodes.
struct Example1d {
  double epsilon = 0.0;
  int n = 0;
  double lambda1 = 0.0;
  double mu1 = 0.0;      // sqrt(eps) (lambda1 - 1/eps)
  double sup_err = 0.0;  // sup |u1 - w1(x / eps^{1/4})|, u1(argmax) = 1
  std::vector<double> grid_x;  // including the boundary nodes
  std::vector<double> u1;      // including the boundary zeros
};

Example1d solve_example_1d(double epsilon, int n, std::uint64_t seed = 42,
                           double tol = 1e-9);

}  // namespace rodspec::direct
