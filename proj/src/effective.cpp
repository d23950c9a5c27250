#include "rodspec/effective.hpp"

#include <algorithm>
#include <cmath>

#include "rodspec/eigensolve.hpp"

namespace rodspec::effective {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic sign: positive at the smallest z where |v| exceeds half its
// maximum.
void fix_sign(EffectiveEigenPair& p) {
  double vmax = 0.0;
  for (double v : p.values) vmax = std::max(vmax, std::abs(v));
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    if (std::abs(p.values[i]) > 0.5 * vmax) {
      if (p.values[i] < 0.0)
        for (double& v : p.values) v = -v;
      return;
    }
  }
}

// Coefficients of the physicists' Hermite polynomial H_m.
std::vector<double> hermite_coefficients(int m) {
  std::vector<double> prev{1.0};
  if (m == 0) return prev;
  std::vector<double> cur{0.0, 2.0};
  for (int k = 1; k < m; ++k) {
    std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0 * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= 2.0 * k * prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

// \int H_m(t)^2 e^{-t^2} dt via even Gaussian moments
// M_0 = sqrt(pi), M_{2k} = (2k-1)/2 M_{2k-2}.
double hermite_square_integral(const std::vector<double>& coeff) {
  int degree = static_cast<int>(coeff.size()) - 1;
  std::vector<double> moments(static_cast<std::size_t>(2 * degree) + 1, 0.0);
  moments[0] = std::sqrt(kPi);
  for (int k = 2; k <= 2 * degree; k += 2)
    moments[static_cast<std::size_t>(k)] =
        moments[static_cast<std::size_t>(k - 2)] * (k - 1) / 2.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < coeff.size(); ++i)
    for (std::size_t j = 0; j < coeff.size(); ++j)
      if ((i + j) % 2 == 0) acc += coeff[i] * coeff[j] * moments[i + j];
  return acc;
}

double poly_eval(const std::vector<double>& coeff, double x) {
  double acc = 0.0;
  for (std::size_t i = coeff.size(); i-- > 0;) acc = acc * x + coeff[i];
  return acc;
}

struct FdmProblem {
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> potential;
  double a = 1.0;
};

struct FdmSolve {
  std::vector<double> nu;
  std::vector<std::vector<double>> vectors;  // interior nodes, sum v^2 dz = 1
  std::vector<double> nodes;
};

FdmSolve fdm_solve(const FdmProblem& prob, int n, int j_max, std::uint64_t seed, double tol) {
  const double dz = (prob.hi - prob.lo) / (n + 1);
  fem::SparseMatrix K;
  K.n = n;
  K.symmetric = true;
  K.row_ptr.push_back(0);
  std::vector<double> nodes(static_cast<std::size_t>(n));
  double vmin = std::numeric_limits<double>::infinity();
  std::vector<double> pot(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = prob.lo + (i + 1) * dz;
    pot[static_cast<std::size_t>(i)] = prob.potential(nodes[static_cast<std::size_t>(i)]);
    vmin = std::min(vmin, pot[static_cast<std::size_t>(i)]);
  }
  const double off = -prob.a / (dz * dz);
  const double diag = 2.0 * prob.a / (dz * dz);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      K.cols.push_back(i - 1);
      K.vals.push_back(off);
    }
    K.cols.push_back(i);
    K.vals.push_back(diag + pot[static_cast<std::size_t>(i)]);
    if (i + 1 < n) {
      K.cols.push_back(i + 1);
      K.vals.push_back(off);
    }
    K.row_ptr.push_back(static_cast<int>(K.cols.size()));
  }

  eig::LanczosOptions lo;
  lo.count = j_max;
  lo.tol = tol;
  lo.seed = seed;
  lo.shift = vmin;
  auto pairs = eig::smallest_eigenpairs(K, eig::identity_matrix(n), lo);

  FdmSolve out;
  out.nodes = std::move(nodes);
  for (auto& p : pairs) {
    out.nu.push_back(p.value);
    double scale = 1.0 / std::sqrt(dz);
    for (double& v : p.vector) v *= scale;
    out.vectors.push_back(std::move(p.vector));
  }
  return out;
}

}  // namespace

double EffectiveEigenPair::value_at(double z) const {
  if (grid_z.empty() || z <= grid_z.front() || z >= grid_z.back()) return 0.0;
  auto it = std::upper_bound(grid_z.begin(), grid_z.end(), z);
  std::size_t hi = static_cast<std::size_t>(it - grid_z.begin());
  std::size_t lo = hi - 1;
  double t = (z - grid_z[lo]) / (grid_z[hi] - grid_z[lo]);
  return (1.0 - t) * values[lo] + t * values[hi];
}

std::vector<EffectiveEigenPair> hermite_eigenpairs(double a_eff, double curvature,
                                                   int j_max) {
  if (!(a_eff > 0.0) || !(curvature > 0.0))
    throw NumericalError("hermite_eigenpairs needs a_eff > 0 and curvature > 0");
  const double theta = curvature / (2.0 * a_eff);
  const double q = std::pow(theta, 0.25);
  const double level = std::sqrt(a_eff * curvature / 2.0);

  const double L = 12.0 / q;
  const int n = 4096;
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) grid[static_cast<std::size_t>(i)] = -L + 2.0 * L * i / n;

  std::vector<EffectiveEigenPair> out;
  for (int j = 1; j <= j_max; ++j) {
    auto coeff = hermite_coefficients(j - 1);
    // ||H_j(q z) e^{-sqrt(theta) z^2 / 2}||^2 = I / q with I the Gaussian
    // square integral of H_{j-1}.
    double nrm = std::sqrt(hermite_square_integral(coeff) / q);
    EffectiveEigenPair p;
    p.nu = (2.0 * j - 1.0) * level;
    p.grid_z = grid;
    p.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double z = grid[i];
      p.values[i] = poly_eval(coeff, q * z) * std::exp(-std::sqrt(theta) * z * z / 2.0) / nrm;
    }
    fix_sign(p);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<EffectiveEigenPair> solve_oscillator_fdm(const EffectiveModel& model, int j_max,
                                                     std::uint64_t seed, double tol) {
  if (!(model.a_eff > 0.0)) throw NumericalError("oscillator needs a_eff > 0");

  FdmProblem prob;
  prob.a = model.a_eff;
  bool half_line = model.kind == ModelKind::kOscHalfline;
  double L = model.truncation_L;
  switch (model.kind) {
    case ModelKind::kOscK2:
    case ModelKind::kOscBeta2:
    case ModelKind::kOscHalfline: {
      if (!(model.curvature > 0.0)) throw NumericalError("oscillator needs curvature > 0");
      double theta = model.curvature / (2.0 * model.a_eff);
      if (L <= 0.0) L = 12.0 / std::pow(theta, 0.25);
      double shift = model.kind == ModelKind::kOscBeta2 ? model.c_eff : 0.0;
      double curv = model.curvature;
      prob.potential = [curv, shift](double z) { return shift + 0.5 * curv * z * z; };
      break;
    }
    case ModelKind::kOscFlatK: {
      int k = model.flatness_order;
      if (k < 2 || k % 2 != 0) throw NumericalError("flatness order must be even and >= 2");
      double kappa = model.kth_derivative;
      for (int i = 2; i <= k; ++i) kappa /= i;  // d^k / k!
      if (!(kappa > 0.0)) throw NumericalError("flat oscillator needs a positive coefficient");
      double nu_char = std::pow(model.a_eff, static_cast<double>(k) / (k + 2)) *
                       std::pow(kappa, 2.0 / (k + 2));
      double nu_estimate = nu_char * (2.0 * j_max + 1.0);
      if (L <= 0.0) L = std::pow(50.0 * nu_estimate / kappa, 1.0 / k);
      prob.potential = [kappa, k](double z) { return kappa * std::pow(z, k); };
      break;
    }
    case ModelKind::kSlBeta0:
      throw NumericalError("use solve_sturm_liouville_beta0 for the beta=0 model");
  }

  for (int l_attempt = 0; l_attempt < 2; ++l_attempt) {
    prob.lo = half_line ? 0.0 : -L;
    prob.hi = L;

    // Two-grid Richardson extrapolation of the 3-point scheme; iterate until
    // the extrapolated values settle.
    int n = model.grid_n > 0 ? model.grid_n : 1024;
    FdmSolve coarse = fdm_solve(prob, n, j_max, seed, tol);
    FdmSolve fine;
    std::vector<double> nu_extrap(static_cast<std::size_t>(j_max));
    if (model.grid_n > 0) {
      fine = std::move(coarse);
      for (int j = 0; j < j_max; ++j)
        nu_extrap[static_cast<std::size_t>(j)] = fine.nu[static_cast<std::size_t>(j)];
    } else {
      std::vector<double> prev(static_cast<std::size_t>(j_max),
                               std::numeric_limits<double>::infinity());
      while (true) {
        fine = fdm_solve(prob, 2 * n + 1, j_max, seed, tol);
        bool settled = true;
        for (int j = 0; j < j_max; ++j) {
          // dz halves exactly with n -> 2n+1.
          double e = (4.0 * fine.nu[static_cast<std::size_t>(j)] -
                      coarse.nu[static_cast<std::size_t>(j)]) /
                     3.0;
          if (std::abs(e - prev[static_cast<std::size_t>(j)]) >
              1e-8 * std::max(1.0, std::abs(e)))
            settled = false;
          nu_extrap[static_cast<std::size_t>(j)] = e;
          prev[static_cast<std::size_t>(j)] = e;
        }
        if (settled || 2 * n + 1 >= (1 << 15)) break;
        coarse = std::move(fine);
        n = 2 * n + 1;
      }
    }

    // Truncation check: eigenfunction mass at the open ends.
    double boundary_mass = 0.0;
    double dz = (prob.hi - prob.lo) / (static_cast<int>(fine.nodes.size()) + 1);
    for (const auto& v : fine.vectors) {
      double far = std::abs(v.back()) * std::sqrt(dz);
      double near = half_line ? 0.0 : std::abs(v.front()) * std::sqrt(dz);
      boundary_mass = std::max({boundary_mass, far, near});
    }
    if (boundary_mass > 1e-8) {
      if (l_attempt == 1)
        throw NumericalError("oscillator truncation insufficient even after doubling L");
      L *= 2.0;
      continue;
    }

    std::vector<EffectiveEigenPair> out;
    for (int j = 0; j < j_max; ++j) {
      EffectiveEigenPair p;
      p.nu = nu_extrap[static_cast<std::size_t>(j)];
      p.grid_z = fine.nodes;
      p.values = fine.vectors[static_cast<std::size_t>(j)];
      if (half_line && model.side > 0) {
        // Minimum at x1 = +1/2: the physical half line is z < 0.
        std::reverse(p.values.begin(), p.values.end());
        std::vector<double> zs(p.grid_z.size());
        for (std::size_t i = 0; i < zs.size(); ++i)
          zs[i] = -p.grid_z[p.grid_z.size() - 1 - i];
        p.grid_z = std::move(zs);
      }
      fix_sign(p);
      out.push_back(std::move(p));
    }
    for (std::size_t j = 1; j < out.size(); ++j)
      if (!(out[j].nu > out[j - 1].nu))
        throw NumericalError("effective spectrum is not strictly increasing");
    return out;
  }
  throw NumericalError("oscillator truncation loop failed");
}

std::vector<EffectiveEigenPair> solve_sturm_liouville_beta0(
    const std::function<double(double)>& a_eff_profile,
    const std::function<double(double)>& cbar_profile, int j_max, int n, std::uint64_t seed,
    double tol) {
  const double lo = -0.5, hi = 0.5;
  const double dx = (hi - lo) / (n + 1);
  fem::SparseMatrix K;
  K.n = n;
  K.symmetric = true;
  K.row_ptr.push_back(0);
  std::vector<double> nodes(static_cast<std::size_t>(n));
  std::vector<double> a_mid(static_cast<std::size_t>(n) + 1);
  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    double xm = lo + (i + 0.5) * dx;
    a_mid[static_cast<std::size_t>(i)] = a_eff_profile(xm);
    if (!(a_mid[static_cast<std::size_t>(i)] > 0.0))
      throw NumericalError("a_eff profile must be positive");
  }
  std::vector<double> cv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = lo + (i + 1) * dx;
    cv[static_cast<std::size_t>(i)] = cbar_profile(nodes[static_cast<std::size_t>(i)]);
    cmin = std::min(cmin, cv[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < n; ++i) {
    double al = a_mid[static_cast<std::size_t>(i)];
    double ar = a_mid[static_cast<std::size_t>(i) + 1];
    if (i > 0) {
      K.cols.push_back(i - 1);
      K.vals.push_back(-al / (dx * dx));
    }
    K.cols.push_back(i);
    K.vals.push_back((al + ar) / (dx * dx) + cv[static_cast<std::size_t>(i)]);
    if (i + 1 < n) {
      K.cols.push_back(i + 1);
      K.vals.push_back(-ar / (dx * dx));
    }
    K.row_ptr.push_back(static_cast<int>(K.cols.size()));
  }

  eig::LanczosOptions lopt;
  lopt.count = j_max;
  lopt.tol = tol;
  lopt.seed = seed;
  lopt.shift = cmin;
  auto pairs = eig::smallest_eigenpairs(K, eig::identity_matrix(n), lopt);

  std::vector<EffectiveEigenPair> out;
  for (auto& p : pairs) {
    EffectiveEigenPair e;
    e.nu = p.value;
    e.grid_z = nodes;
    e.values = std::move(p.vector);
    double scale = 1.0 / std::sqrt(dx);
    for (double& v : e.values) v *= scale;
    fix_sign(e);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rodspec::effective
