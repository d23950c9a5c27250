#include "rodspec/cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rodspec/errors.hpp"

namespace rodspec::cell {

namespace {

fem::SparseMatrix drop_first_dof(const fem::SparseMatrix& K) {
  fem::SparseMatrix out;
  out.n = K.n - 1;
  out.symmetric = K.symmetric;
  out.row_ptr.push_back(0);
  for (int i = 1; i < K.n; ++i) {
    for (int k = K.row_ptr[static_cast<std::size_t>(i)];
         k < K.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      int c = K.cols[static_cast<std::size_t>(k)];
      if (c == 0) continue;
      out.cols.push_back(c - 1);
      out.vals.push_back(K.vals[static_cast<std::size_t>(k)]);
    }
    out.row_ptr.push_back(static_cast<int>(out.cols.size()));
  }
  return out;
}

double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// P1 value of a vertex field at the centroid of triangle t.
double centroid_value(const mesh::TriMesh& m, int t, const std::vector<double>& values) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  return (values[static_cast<std::size_t>(tri[0])] + values[static_cast<std::size_t>(tri[1])] +
          values[static_cast<std::size_t>(tri[2])]) /
         3.0;
}

struct CellSystem {
  mesh::TriMesh cell_mesh;
  fem::DofMap dofs;
  fem::SparseMatrix stiffness;
  double area = 0.0;
};

CellSystem build_cell_system(const std::shared_ptr<const geom::CellGeometry>& geometry,
                             const geom::CoefficientSet& coefficients, double x1, double h) {
  CellSystem sys;
  sys.cell_mesh = mesh::mesh_cell(geometry, x1, h);
  sys.dofs = fem::periodicify(sys.cell_mesh);
  sys.stiffness = fem::assemble_stiffness(sys.cell_mesh, coefficients, x1, sys.dofs);
  sys.area = sys.cell_mesh.total_area();
  return sys;
}

CorrectorField solve_corrector_on(const CellSystem& sys,
                                  const geom::CoefficientSet& coefficients, double x1,
                                  int axis, const std::vector<double>* element_scale,
                                  const fem::SparseMatrix* weighted_stiffness) {
  const fem::SparseMatrix& K = weighted_stiffness ? *weighted_stiffness : sys.stiffness;
  fem::Mat2Coefficient a = fem::matrix_on_mesh(sys.cell_mesh, coefficients, x1);
  std::vector<double> b =
      fem::assemble_corrector_rhs(sys.cell_mesh, a, axis, sys.dofs, element_scale);

  CorrectorField field;
  field.axis = axis;

  double bnorm = norm2(b);
  if (bnorm <= 1e-14 * std::max(1.0, K.max_abs())) {
    field.vertex_values.assign(sys.cell_mesh.vertices.size(), 0.0);
    return field;
  }
  double bsum = 0.0;
  for (double v : b) bsum += v;
  if (std::abs(bsum) > 1e-8 * bnorm)
    throw NumericalError("corrector right-hand side violates the compatibility condition");

  std::vector<double> x = solve_singular_pinned(K, b);
  field.vertex_values = sys.dofs.expand(x);
  double mean = fem::integrate_p1(sys.cell_mesh, field.vertex_values) / sys.area;
  for (double& v : field.vertex_values) v -= mean;
  return field;
}

// Energy and flux forms of the effective matrix from solved correctors.
EffectiveMatrix effective_from_correctors(const CellSystem& sys,
                                          const geom::CoefficientSet& coefficients, double x1,
                                          const CorrectorField& n1, const CorrectorField& n2,
                                          const std::vector<double>* weight_vertex) {
  fem::Mat2Coefficient a = fem::matrix_on_mesh(sys.cell_mesh, coefficients, x1);
  const mesh::TriMesh& m = sys.cell_mesh;
  double energy[2][2] = {{0, 0}, {0, 0}};
  double flux[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double area = m.triangle_area(static_cast<int>(t));
    auto coeff = a.at(m.centroid(static_cast<int>(t)));
    double w = 1.0;
    if (weight_vertex) {
      double p = centroid_value(m, static_cast<int>(t), *weight_vertex);
      w = p * p;
    }
    auto g1 = fem::element_gradient(m, static_cast<int>(t), n1.vertex_values);
    auto g2 = fem::element_gradient(m, static_cast<int>(t), n2.vertex_values);
    double w1[2] = {1.0 + g1[0], g1[1]};
    double w2[2] = {g2[0], 1.0 + g2[1]};
    const double* wk[2] = {w1, w2};
    for (int i = 0; i < 2; ++i) {
      for (int k = i; k < 2; ++k) {
        double qx = coeff.a11 * wk[k][0] + coeff.a12 * wk[k][1];
        double qy = coeff.a12 * wk[k][0] + coeff.a22 * wk[k][1];
        double v = w * area * (wk[i][0] * qx + wk[i][1] * qy);
        energy[i][k] += v;
      }
      double row0 = i == 0 ? coeff.a11 : coeff.a12;
      double row1 = i == 0 ? coeff.a12 : coeff.a22;
      for (int k = 0; k < 2; ++k)
        flux[i][k] += w * area * (row0 * wk[k][0] + row1 * wk[k][1]);
    }
  }
  EffectiveMatrix out;
  out.x1_slice = x1;
  out.cell_area = sys.area;
  out.A[0][0] = energy[0][0] / sys.area;
  out.A[0][1] = energy[0][1] / sys.area;
  out.A[1][0] = out.A[0][1];
  out.A[1][1] = energy[1][1] / sys.area;
  out.a_eff = out.A[0][0];
  double disc = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      double e = i <= k ? out.A[i][k] : out.A[k][i];
      disc = std::max(disc, std::abs(e - flux[i][k] / sys.area));
    }
  out.form_discrepancy = disc;
  return out;
}

}  // namespace

double EffectiveMatrix::norm() const {
  double m = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) m = std::max(m, std::abs(A[i][k]));
  return m;
}

std::vector<double> solve_singular_pinned(const fem::SparseMatrix& K,
                                          const std::vector<double>& b) {
  if (K.n < 2) throw NumericalError("singular solve needs at least two dofs");
  fem::SparseMatrix reduced = drop_first_dof(K);
  eig::LdltFactor factor(reduced);
  if (!factor.usable())
    throw NumericalError("pinned cell operator is numerically singular");
  std::vector<double> br(b.begin() + 1, b.end());
  std::vector<double> xr = factor.solve(br);
  std::vector<double> x(static_cast<std::size_t>(K.n), 0.0);
  std::copy(xr.begin(), xr.end(), x.begin() + 1);

  std::vector<double> r = K.multiply(x);
  double rnorm = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double ri = r[i] - b[i];
    rnorm += ri * ri;
  }
  if (std::sqrt(rnorm) > 1e-8 * std::max(norm2(b), 1e-30))
    throw NumericalError("pinned singular solve residual exceeds 1e-8 relative");
  return x;
}

CorrectorField solve_corrector(const mesh::TriMesh& cell_mesh, const fem::DofMap& dofs,
                               const fem::SparseMatrix& K,
                               const geom::CoefficientSet& coefficients, double x1,
                               int axis) {
  CellSystem sys;
  sys.cell_mesh = cell_mesh;
  sys.dofs = dofs;
  sys.stiffness = K;
  sys.area = cell_mesh.total_area();
  return solve_corrector_on(sys, coefficients, x1, axis, nullptr, nullptr);
}

CorrectorField solve_corrector(const std::shared_ptr<const geom::CellGeometry>& geometry,
                               const geom::CoefficientSet& coefficients, double x1, double h,
                               int axis) {
  CellSystem sys = build_cell_system(geometry, coefficients, x1, h);
  return solve_corrector_on(sys, coefficients, x1, axis, nullptr, nullptr);
}

CellSolution solve_cell(const std::shared_ptr<const geom::CellGeometry>& geometry,
                        const geom::CoefficientSet& coefficients, double x1, double h) {
  CellSystem sys = build_cell_system(geometry, coefficients, x1, h);
  CellSolution out;
  out.n1 = solve_corrector_on(sys, coefficients, x1, 1, nullptr, nullptr);
  out.n2 = solve_corrector_on(sys, coefficients, x1, 2, nullptr, nullptr);
  out.effective = effective_from_correctors(sys, coefficients, x1, out.n1, out.n2, nullptr);
  out.cell_mesh = std::move(sys.cell_mesh);
  out.dofs = std::move(sys.dofs);
  return out;
}

EffectiveMatrix effective_matrix(const std::shared_ptr<const geom::CellGeometry>& geometry,
                                 const geom::CoefficientSet& coefficients, double x1,
                                 double h) {
  return solve_cell(geometry, coefficients, x1, h).effective;
}

namespace {

CellEigenData cell_eigen_on(const CellSystem& sys, const geom::CoefficientSet& coefficients,
                            double x1_for_coefficients, const SolverOptions& options) {
  const mesh::TriMesh& m = sys.cell_mesh;
  fem::SparseMatrix K =
      fem::assemble_stiffness(m, coefficients, x1_for_coefficients, sys.dofs);
  fem::SparseMatrix C = fem::assemble_mass(
      m, fem::scalar_on_mesh(m, *coefficients.c, x1_for_coefficients), sys.dofs);
  fem::SparseMatrix M = fem::assemble_mass(m, fem::unit_weight(), sys.dofs);
  fem::SparseMatrix A = K.add_scaled(C, 1.0);

  double cmin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    mesh::Vec2 c = m.centroid(static_cast<int>(t));
    cmin = std::min(cmin, coefficients.c_at(x1_for_coefficients, c.x, c.y));
  }

  eig::LanczosOptions lo;
  lo.count = 2;
  lo.tol = options.tol;
  lo.seed = options.seed;
  lo.shift = 0.9 * cmin;
  auto pairs = eig::smallest_eigenpairs(A, M, lo);

  CellEigenData out;
  out.x1_slice = x1_for_coefficients;
  out.lambda1 = pairs[0].value;
  out.gap_to_second = pairs[1].value - pairs[0].value;

  std::vector<double> p = sys.dofs.expand(pairs[0].vector);
  double max_abs = 0.0;
  double at_max = 0.0;
  for (double v : p)
    if (std::abs(v) > max_abs) {
      max_abs = std::abs(v);
      at_max = v;
    }
  if (at_max < 0.0)
    for (double& v : p) v = -v;
  // x'Mx = 1 already; normalize to \int p^2 = |Y|.
  double scale = std::sqrt(sys.area);
  for (double& v : p) v *= scale;
  out.positivity_ok = true;
  for (double v : p)
    if (v < -1e-8 * max_abs * scale) out.positivity_ok = false;
  out.p1 = std::move(p);
  return out;
}

}  // namespace

CellEigenData solve_cell_eigen(const std::shared_ptr<const geom::CellGeometry>& geometry,
                               const geom::CoefficientSet& coefficients, double x1, double h,
                               const SolverOptions& options) {
  CellSystem sys = build_cell_system(geometry, coefficients, x1, h);
  return cell_eigen_on(sys, coefficients, x1, options);
}

double lambda1_curvature(const std::shared_ptr<const geom::CellGeometry>& geometry,
                         const geom::CoefficientSet& coefficients, double h, double step,
                         const SolverOptions& options) {
  double lam[5];
  for (int i = -2; i <= 2; ++i)
    lam[i + 2] = solve_cell_eigen(geometry, coefficients, i * step, h, options).lambda1;
  return (-lam[4] + 16 * lam[3] - 30 * lam[2] + 16 * lam[1] - lam[0]) / (12 * step * step);
}

Beta2Effective beta2_effective(const std::shared_ptr<const geom::CellGeometry>& geometry,
                               const geom::CoefficientSet& coefficients, double h,
                               double delta, double curvature_step,
                               const SolverOptions& options) {
  CellSystem sys = build_cell_system(geometry, coefficients, 0.0, h);
  const mesh::TriMesh& m = sys.cell_mesh;

  // p1 at x1 = 0 and x1 = +-delta on the x1=0 mesh (frozen domain, shifted
  // coefficients) so the finite differences act on matching dofs.
  CellEigenData e0 = cell_eigen_on(sys, coefficients, 0.0, options);
  CellEigenData ep = cell_eigen_on(sys, coefficients, delta, options);
  CellEigenData em = cell_eigen_on(sys, coefficients, -delta, options);

  auto align = [&](CellEigenData& e) {
    double overlap = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      double area = m.triangle_area(static_cast<int>(t));
      overlap += area * centroid_value(m, static_cast<int>(t), e.p1) *
                 centroid_value(m, static_cast<int>(t), e0.p1);
    }
    if (overlap < 0)
      for (double& v : e.p1) v = -v;
  };
  align(ep);
  align(em);

  std::vector<double> q(m.vertices.size());
  for (std::size_t v = 0; v < q.size(); ++v)
    q[v] = (ep.p1[v] - em.p1[v]) / (2.0 * delta);

  // Weighted corrector along the rod axis with weight p1(0,.)^2.
  std::vector<double> weight_by_tri(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double p = centroid_value(m, static_cast<int>(t), e0.p1);
    weight_by_tri[t] = p * p;
  }
  fem::Mat2Coefficient a0 = fem::matrix_on_mesh(m, coefficients, 0.0);
  fem::SparseMatrix Kw = fem::assemble_stiffness(m, a0, sys.dofs, &weight_by_tri);
  CorrectorField n2w = solve_corrector_on(sys, coefficients, 0.0, 1, &weight_by_tri, &Kw);

  Beta2Effective out;
  out.lambda1_0 = e0.lambda1;
  out.lambda1_curvature = lambda1_curvature(geometry, coefficients, h, curvature_step, options);

  // Weighted energy form, axis 1 only.
  double acc = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double area = m.triangle_area(static_cast<int>(t));
    auto coeff = a0.at(m.centroid(static_cast<int>(t)));
    auto g = fem::element_gradient(m, static_cast<int>(t), n2w.vertex_values);
    double w1[2] = {1.0 + g[0], g[1]};
    double qx = coeff.a11 * w1[0] + coeff.a12 * w1[1];
    double qy = coeff.a12 * w1[0] + coeff.a22 * w1[1];
    acc += weight_by_tri[t] * area * (w1[0] * qx + w1[1] * qy);
  }
  out.a_eff_w = acc / sys.area;

  // Drift term: c_eff = -(1/|Y|) \int p1 ( d_x1 a_{1j} d_yj p1
  //   + a_{1j} d_yj q + div_y(a_{.1} q) ), with the last term integrated by
  //   parts: -\int grad(p1) . a_{.1} q + boundary flux p1 q a_{.1} . n.
  double t1 = 0.0, t2 = 0.0, t3_volume = 0.0;
  fem::Mat2Coefficient ap = fem::matrix_on_mesh(m, coefficients, delta);
  fem::Mat2Coefficient am = fem::matrix_on_mesh(m, coefficients, -delta);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double area = m.triangle_area(static_cast<int>(t));
    mesh::Vec2 c = m.centroid(static_cast<int>(t));
    auto coeff = a0.at(c);
    auto cp = ap.at(c);
    auto cm = am.at(c);
    double dx_a11 = (cp.a11 - cm.a11) / (2.0 * delta);
    double dx_a12 = (cp.a12 - cm.a12) / (2.0 * delta);
    double pbar = centroid_value(m, static_cast<int>(t), e0.p1);
    double qbar = centroid_value(m, static_cast<int>(t), q);
    auto gp = fem::element_gradient(m, static_cast<int>(t), e0.p1);
    auto gq = fem::element_gradient(m, static_cast<int>(t), q);
    t1 += area * pbar * (dx_a11 * gp[0] + dx_a12 * gp[1]);
    t2 += area * pbar * (coeff.a11 * gq[0] + coeff.a12 * gq[1]);
    t3_volume -= area * (gp[0] * coeff.a11 + gp[1] * coeff.a12) * qbar;
  }

  // Boundary flux of the integrated-by-parts term over lateral and hole
  // edges (periodic faces cancel).
  std::map<std::pair<int, int>, int> edge_tri;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int u = tri[static_cast<std::size_t>(e)];
      int v = tri[static_cast<std::size_t>((e + 1) % 3)];
      edge_tri[{std::min(u, v), std::max(u, v)}] = static_cast<int>(t);
    }
  }
  double t3_boundary = 0.0;
  for (const mesh::BoundaryEdge& e : m.boundary) {
    auto it = edge_tri.find({std::min(e.v0, e.v1), std::max(e.v0, e.v1)});
    if (it == edge_tri.end()) continue;
    const auto& tri = m.triangles[static_cast<std::size_t>(it->second)];
    int third = tri[0] + tri[1] + tri[2] - e.v0 - e.v1;
    const mesh::Vec2& p0 = m.vertices[static_cast<std::size_t>(e.v0)];
    const mesh::Vec2& p1v = m.vertices[static_cast<std::size_t>(e.v1)];
    const mesh::Vec2& pw = m.vertices[static_cast<std::size_t>(third)];
    double ex = p1v.x - p0.x, ey = p1v.y - p0.y;
    double len = std::hypot(ex, ey);
    double nx = ey / len, ny = -ex / len;
    double mx = 0.5 * (p0.x + p1v.x), my = 0.5 * (p0.y + p1v.y);
    if (nx * (pw.x - mx) + ny * (pw.y - my) > 0) {
      nx = -nx;
      ny = -ny;
    }
    auto coeff = a0.at({mx, my});
    double pmid = 0.5 * (e0.p1[static_cast<std::size_t>(e.v0)] +
                         e0.p1[static_cast<std::size_t>(e.v1)]);
    double qmid =
        0.5 * (q[static_cast<std::size_t>(e.v0)] + q[static_cast<std::size_t>(e.v1)]);
    t3_boundary += len * pmid * qmid * (coeff.a11 * nx + coeff.a12 * ny);
  }

  out.c_eff = -(t1 + t2 + t3_volume + t3_boundary) / sys.area;
  return out;
}

}  // namespace rodspec::cell
