#include "rodspec/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rodspec/errors.hpp"

namespace rodspec::direct {

namespace {

double centroid_value(const mesh::TriMesh& m, int t, const std::vector<double>& values) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  return (values[static_cast<std::size_t>(tri[0])] + values[static_cast<std::size_t>(tri[1])] +
          values[static_cast<std::size_t>(tri[2])]) /
         3.0;
}

}  // namespace

double midpoint_l2_sq(const mesh::TriMesh& m, const std::vector<double>& vertex_values) {
  double acc = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double v = centroid_value(m, static_cast<int>(t), vertex_values);
    acc += m.triangle_area(static_cast<int>(t)) * v * v;
  }
  return acc;
}

DirectSpectrum solve_direct(const std::shared_ptr<const geom::CellGeometry>& geometry,
                            const geom::CoefficientSet& coefficients,
                            const geom::RodGeometry& rod, int beta, int j_max, double h_y,
                            const DirectOptions& options) {
  if (beta < 0 || beta > 2) throw ConfigError("beta must be 0, 1 or 2");

  DirectSpectrum out;
  out.epsilon = rod.epsilon;
  out.beta = beta;
  out.seed = options.seed;
  out.rod_mesh = mesh::mesh_rod(geometry, rod, h_y);
  out.dofs = fem::build_dofs(out.rod_mesh, {mesh::Tag::kEndMinus, mesh::Tag::kEndPlus}, false);

  const double eps = rod.epsilon;
  const double big = std::pow(eps, -static_cast<double>(beta));
  fem::SparseMatrix K = fem::assemble_stiffness(out.rod_mesh, coefficients, std::nullopt,
                                                out.dofs);
  fem::SparseMatrix C = fem::assemble_mass(out.rod_mesh, coefficients.c.get(), std::nullopt,
                                           out.dofs);
  fem::SparseMatrix M = fem::assemble_mass(out.rod_mesh, nullptr, std::nullopt, out.dofs);
  fem::SparseMatrix A = K.add_scaled(C, big);

  double sigma0 = 0.0;
  if (beta > 0) {
    double cbar_min;
    if (options.cbar_min) {
      cbar_min = *options.cbar_min;
    } else {
      geom::MinimizeOptions mo;
      cbar_min = geom::minimize_cbar(*geometry, coefficients, mo).cbar_min;
    }
    sigma0 = 0.9 * cbar_min * big;
  }

  eig::LanczosOptions lo;
  lo.count = j_max;
  lo.tol = options.tol;
  lo.seed = options.seed;
  lo.shift = sigma0;
  auto pairs = eig::smallest_eigenpairs(A, M, lo);
  out.shift_used = sigma0;

  const double w = geometry->cross_section.half_width;
  const double q_measure = 2.0 * w;
  double gamma = options.gamma ? *options.gamma : beta / 4.0;
  double target = beta == 0 ? 1.0 : std::pow(eps, gamma) * eps * q_measure;
  out.normalization_target = target;

  for (auto& p : pairs) {
    std::vector<double> u = out.dofs.expand(p.vector);
    double nrm_sq = midpoint_l2_sq(out.rod_mesh, u);
    double scale = std::sqrt(target / nrm_sq);
    for (double& v : u) v *= scale;

    // Sign alignment against the effective eigenfunction when available,
    // otherwise a deterministic first-extremum rule.
    std::size_t j_index = out.lambdas.size();
    bool flip = false;
    if (options.align_to && j_index < options.align_to->size()) {
      const auto& veff = (*options.align_to)[j_index];
      double overlap = 0.0;
      for (std::size_t t = 0; t < out.rod_mesh.triangles.size(); ++t) {
        mesh::Vec2 c = out.rod_mesh.centroid(static_cast<int>(t));
        double z = (c.x - options.x1_min) / std::pow(eps, gamma);
        overlap += out.rod_mesh.triangle_area(static_cast<int>(t)) *
                   centroid_value(out.rod_mesh, static_cast<int>(t), u) * veff.value_at(z);
      }
      flip = overlap < 0.0;
    } else {
      double vmax = 0.0, at_max = 0.0;
      for (double v : u)
        if (std::abs(v) > vmax) {
          vmax = std::abs(v);
          at_max = v;
        }
      flip = at_max < 0.0;
    }
    if (flip)
      for (double& v : u) v = -v;

    out.lambdas.push_back(p.value);
    out.residuals.push_back(p.residual);
    out.vertex_vectors.push_back(std::move(u));
  }

  if (beta > 0) {
    double cmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < out.rod_mesh.triangles.size(); ++t) {
      mesh::Vec2 c = out.rod_mesh.centroid(static_cast<int>(t));
      cmin = std::min(cmin, coefficients.c_at(c.x, c.x / eps, c.y / eps));
    }
    out.floor_value = cmin * big;
    out.floor_ok = out.lambdas.empty() || out.lambdas.front() > out.floor_value;
  }
  return out;
}

std::vector<double> solve_rescaled_nu(const DirectSpectrum& spectrum,
                                      const geom::CoefficientSet& coefficients, double cbar0,
                                      int count, const DirectOptions& options) {
  if (spectrum.beta != 1)
    throw NumericalError("the rescaled-operator route applies to beta = 1");
  const double eps = spectrum.epsilon;
  const double scale = std::pow(eps, -0.25);

  mesh::TriMesh scaled = spectrum.rod_mesh;
  for (mesh::Vec2& v : scaled.vertices) {
    v.x *= scale;
    v.y *= scale;
  }

  // z-coordinates map back to the physical point x = eps^{1/4} z, so the
  // coefficient fields take the same values as in the direct assembly.
  const double q14 = std::pow(eps, 0.25);
  fem::Mat2Coefficient a_tilde{[&coefficients, q14, eps](mesh::Vec2 z) {
    double x1 = q14 * z.x;
    double x2 = q14 * z.y;
    return coefficients.a_at(x1, x1 / eps, x2 / eps);
  }};
  fem::ScalarCoefficient c_tilde{[&coefficients, q14, eps](mesh::Vec2 z) {
    double x1 = q14 * z.x;
    double x2 = q14 * z.y;
    return coefficients.c_at(x1, x1 / eps, x2 / eps);
  }};

  fem::SparseMatrix K = fem::assemble_stiffness(scaled, a_tilde, spectrum.dofs);
  fem::SparseMatrix C = fem::assemble_mass(scaled, c_tilde, spectrum.dofs);
  fem::SparseMatrix M = fem::assemble_mass(scaled, fem::unit_weight(), spectrum.dofs);
  fem::SparseMatrix A = K.add_scaled(C.add_scaled(M, -cbar0), 1.0 / std::sqrt(eps));

  eig::LanczosOptions lo;
  lo.count = count;
  lo.tol = options.tol;
  lo.seed = options.seed;
  lo.shift = 0.0;
  auto pairs = eig::smallest_eigenpairs(A, M, lo);
  std::vector<double> nus;
  for (const auto& p : pairs) nus.push_back(p.value);
  return nus;
}

Example1d solve_example_1d(double epsilon, int n, std::uint64_t seed, double tol) {
  if (n < 1024) throw ConfigError("the 1D example needs n >= 1024 grid points");
  Example1d out;
  out.epsilon = epsilon;
  out.n = n;

  const double dx = 2.0 / (n + 1);
  fem::SparseMatrix K;
  K.n = n;
  K.symmetric = true;
  K.row_ptr.push_back(0);
  for (int i = 0; i < n; ++i) {
    double x = -1.0 + (i + 1) * dx;
    if (i > 0) {
      K.cols.push_back(i - 1);
      K.vals.push_back(-1.0 / (dx * dx));
    }
    K.cols.push_back(i);
    K.vals.push_back(2.0 / (dx * dx) + (1.0 + x * x) / epsilon);
    if (i + 1 < n) {
      K.cols.push_back(i + 1);
      K.vals.push_back(-1.0 / (dx * dx));
    }
    K.row_ptr.push_back(static_cast<int>(K.cols.size()));
  }

  eig::LanczosOptions lo;
  lo.count = 1;
  lo.tol = tol;
  lo.seed = seed;
  lo.shift = 0.9 / epsilon;
  auto pairs = eig::smallest_eigenpairs(K, eig::identity_matrix(n), lo);
  out.lambda1 = pairs[0].value;
  out.mu1 = std::sqrt(epsilon) * (out.lambda1 - 1.0 / epsilon);

  // Normalize by the maximum for the comparison with w1(0) = 1.
  std::vector<double>& v = pairs[0].vector;
  double vmax = 0.0;
  for (double x : v)
    if (std::abs(x) > std::abs(vmax)) vmax = x;
  out.grid_x.resize(static_cast<std::size_t>(n) + 2);
  out.u1.resize(static_cast<std::size_t>(n) + 2);
  out.grid_x.front() = -1.0;
  out.u1.front() = 0.0;
  for (int i = 0; i < n; ++i) {
    out.grid_x[static_cast<std::size_t>(i) + 1] = -1.0 + (i + 1) * dx;
    out.u1[static_cast<std::size_t>(i) + 1] = v[static_cast<std::size_t>(i)] / vmax;
  }
  out.grid_x.back() = 1.0;
  out.u1.back() = 0.0;

  const double q14 = std::pow(epsilon, 0.25);
  double sup = 0.0;
  for (std::size_t i = 0; i < out.grid_x.size(); ++i) {
    double y = out.grid_x[i] / q14;
    sup = std::max(sup, std::abs(out.u1[i] - std::exp(-0.5 * y * y)));
  }
  out.sup_err = sup;
  return out;
}

}  // namespace rodspec::direct
