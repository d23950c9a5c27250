#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rodspec/errors.hpp"

namespace rodspec::effective {

enum class ModelKind {
  kOscK2,       // -a v'' + (curvature/2) z^2 v = nu v on R
  kOscFlatK,    // -a v'' + (d^k/k!) z^k v = nu v on R
  kOscHalfline, // quadratic potential on a half line, Dirichlet wall
  kSlBeta0,     // -(a(x) u')' + cbar(x) u = nu u on I, Dirichlet ends
  kOscBeta2,    // -a v'' + (c_eff + (curvature/2) z^2) v = nu v on R
};

struct EffectiveModel {
  ModelKind kind = ModelKind::kOscK2;
  double a_eff = 1.0;
  double curvature = 2.0;      // cbar''(0), or lambda_1''(0) for beta=2
  int flatness_order = 2;      // k
  double kth_derivative = 2.0; // cbar^{(k)}(0)
  double c_eff = 0.0;          // beta=2 shift
  int side = 1;                // half line: sign of the boundary minimum
  double truncation_L = 0.0;   // 0 = automatic
  int grid_n = 0;              // 0 = automatic doubling
};

// Eigenpair of an effective 1D problem, sampled on a grid and L2-normalized.
struct EffectiveEigenPair {
  double nu = 0.0;
  std::vector<double> grid_z;
  std::vector<double> values;

  // Linear interpolation; zero outside the grid (the pairs decay
  // exponentially there).
  double value_at(double z) const;
};

// Exact harmonic-oscillator spectrum nu_j = (2j-1) sqrt(a_eff curvature / 2)
// with Hermite-function eigenfunctions, normalization constants from the
// Gaussian moment recursion.
std::vector<EffectiveEigenPair> hermite_eigenpairs(double a_eff, double curvature, int j_max);

// 3-point finite differences on a truncated domain; the grid doubles until
// the two-grid extrapolated eigenvalues move by less than 1e-8 relative
// (up to n = 2^15 interior points).
std::vector<EffectiveEigenPair> solve_oscillator_fdm(const EffectiveModel& model, int j_max,
                                                     std::uint64_t seed = 42,
                                                     double tol = 1e-9);

// Conservative flux-form FDM for the bounded-potential limit problem on I
// with Dirichlet ends; a is evaluated at grid midpoints.
std::vector<EffectiveEigenPair> solve_sturm_liouville_beta0(
    const std::function<double(double)>& a_eff_profile,
    const std::function<double(double)>& cbar_profile, int j_max, int n,
    std::uint64_t seed = 42, double tol = 1e-9);

}  // namespace rodspec::effective
