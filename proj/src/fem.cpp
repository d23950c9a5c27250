#include "rodspec/fem.hpp"

#include <algorithm>
#include <cmath>

#include "rodspec/errors.hpp"

namespace rodspec::fem {

namespace {

// Gradients of the three P1 hat functions and twice the signed area.
struct ElementFrame {
  double grad[3][2];
  double area;
};

ElementFrame element_frame(const mesh::TriMesh& m, int t) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  const mesh::Vec2& p0 = m.vertices[static_cast<std::size_t>(tri[0])];
  const mesh::Vec2& p1 = m.vertices[static_cast<std::size_t>(tri[1])];
  const mesh::Vec2& p2 = m.vertices[static_cast<std::size_t>(tri[2])];
  double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  if (det <= 0.0) throw NumericalError("singular or inverted element Jacobian");
  ElementFrame f;
  f.area = 0.5 * det;
  f.grad[0][0] = (p1.y - p2.y) / det;
  f.grad[0][1] = (p2.x - p1.x) / det;
  f.grad[1][0] = (p2.y - p0.y) / det;
  f.grad[1][1] = (p0.x - p2.x) / det;
  f.grad[2][0] = (p0.y - p1.y) / det;
  f.grad[2][1] = (p1.x - p0.x) / det;
  return f;
}

}  // namespace

void SparseMatrix::multiply(const double* x, double* y) const {
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = row_ptr[static_cast<std::size_t>(i)];
         k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      acc += vals[static_cast<std::size_t>(k)] * x[cols[static_cast<std::size_t>(k)]];
    y[i] = acc;
  }
}

std::vector<double> SparseMatrix::multiply(const std::vector<double>& x) const {
  std::vector<double> y(static_cast<std::size_t>(n));
  multiply(x.data(), y.data());
  return y;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : vals) m = std::max(m, std::abs(v));
  return m;
}

SparseMatrix SparseMatrix::add_scaled(const SparseMatrix& other, double scale) const {
  if (n != other.n) throw NumericalError("matrix dimension mismatch in add_scaled");
  SparseMatrix out;
  out.n = n;
  out.symmetric = symmetric && other.symmetric;
  out.row_ptr.resize(static_cast<std::size_t>(n) + 1, 0);
  out.cols.reserve(cols.size() + other.cols.size());
  out.vals.reserve(cols.size() + other.cols.size());
  for (int i = 0; i < n; ++i) {
    int ka = row_ptr[static_cast<std::size_t>(i)];
    int ea = row_ptr[static_cast<std::size_t>(i) + 1];
    int kb = other.row_ptr[static_cast<std::size_t>(i)];
    int eb = other.row_ptr[static_cast<std::size_t>(i) + 1];
    while (ka < ea || kb < eb) {
      int ca = ka < ea ? cols[static_cast<std::size_t>(ka)] : n;
      int cb = kb < eb ? other.cols[static_cast<std::size_t>(kb)] : n;
      if (ca < cb) {
        out.cols.push_back(ca);
        out.vals.push_back(vals[static_cast<std::size_t>(ka++)]);
      } else if (cb < ca) {
        out.cols.push_back(cb);
        out.vals.push_back(scale * other.vals[static_cast<std::size_t>(kb++)]);
      } else {
        out.cols.push_back(ca);
        out.vals.push_back(vals[static_cast<std::size_t>(ka++)] +
                           scale * other.vals[static_cast<std::size_t>(kb++)]);
      }
    }
    out.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<int>(out.cols.size());
  }
  return out;
}

SparseMatrix TripletAccumulator::compress() const {
  std::vector<Entry> sorted = entries_;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix out;
  out.n = n_;
  out.row_ptr.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (std::size_t k = 0; k < sorted.size();) {
    std::size_t j = k;
    double acc = 0.0;
    while (j < sorted.size() && sorted[j].row == sorted[k].row && sorted[j].col == sorted[k].col)
      acc += sorted[j++].value;
    out.cols.push_back(sorted[k].col);
    out.vals.push_back(acc);
    out.row_ptr[static_cast<std::size_t>(sorted[k].row) + 1] =
        static_cast<int>(out.cols.size());
    k = j;
  }
  for (int i = 0; i < n_; ++i)
    out.row_ptr[static_cast<std::size_t>(i) + 1] = std::max(
        out.row_ptr[static_cast<std::size_t>(i) + 1], out.row_ptr[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<double> DofMap::expand(const std::vector<double>& dof_values) const {
  std::vector<double> out(vertex_to_dof.size(), 0.0);
  for (std::size_t v = 0; v < vertex_to_dof.size(); ++v)
    if (vertex_to_dof[v] != kEliminated) out[v] = dof_values[static_cast<std::size_t>(vertex_to_dof[v])];
  return out;
}

DofMap identity_dofs(const mesh::TriMesh& m) {
  DofMap d;
  d.vertex_to_dof.resize(m.vertices.size());
  for (std::size_t v = 0; v < m.vertices.size(); ++v) d.vertex_to_dof[v] = static_cast<int>(v);
  d.n_dofs = static_cast<int>(m.vertices.size());
  return d;
}

DofMap build_dofs(const mesh::TriMesh& m, const std::set<mesh::Tag>& dirichlet_tags,
                  bool periodic) {
  std::vector<char> eliminated(m.vertices.size(), 0);
  for (const mesh::BoundaryEdge& e : m.boundary)
    if (dirichlet_tags.count(e.tag)) {
      eliminated[static_cast<std::size_t>(e.v0)] = 1;
      eliminated[static_cast<std::size_t>(e.v1)] = 1;
    }

  std::vector<int> master(m.vertices.size());
  for (std::size_t v = 0; v < m.vertices.size(); ++v) master[v] = static_cast<int>(v);
  if (periodic) {
    for (const auto& [mas, sla] : m.periodic_pairs) {
      if (eliminated[static_cast<std::size_t>(mas)] || eliminated[static_cast<std::size_t>(sla)])
        throw NumericalError("vertex carries both Dirichlet and periodic roles");
      master[static_cast<std::size_t>(sla)] = mas;
    }
    for (std::size_t v = 0; v < m.vertices.size(); ++v)
      if (master[static_cast<std::size_t>(master[v])] != master[v])
        throw NumericalError("periodic alias chain longer than one");
  }

  DofMap d;
  d.vertex_to_dof.assign(m.vertices.size(), DofMap::kEliminated);
  int next = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (eliminated[v]) continue;
    if (master[v] == static_cast<int>(v)) d.vertex_to_dof[v] = next++;
  }
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (eliminated[v] || master[v] == static_cast<int>(v)) continue;
    d.vertex_to_dof[v] = d.vertex_to_dof[static_cast<std::size_t>(master[v])];
  }
  d.n_dofs = next;
  return d;
}

DofMap apply_dirichlet(const mesh::TriMesh& m, const std::set<mesh::Tag>& tags) {
  return build_dofs(m, tags, false);
}

DofMap periodicify(const mesh::TriMesh& m) { return build_dofs(m, {}, true); }

Mat2Coefficient matrix_on_mesh(const mesh::TriMesh& m, const geom::CoefficientSet& a,
                               std::optional<double> x1_context) {
  if (x1_context) {
    double x1 = *x1_context;
    return {[&a, x1](mesh::Vec2 p) { return a.a_at(x1, p.x, p.y); }};
  }
  if (!m.is_rod)
    throw NumericalError("cell-mesh assembly needs an x1 context");
  double eps = m.rod_epsilon;
  return {[&a, eps](mesh::Vec2 p) { return a.a_at(p.x, p.x / eps, p.y / eps); }};
}

ScalarCoefficient scalar_on_mesh(const mesh::TriMesh& m, const expr::Expr& field,
                                 std::optional<double> x1_context) {
  if (x1_context) {
    double x1 = *x1_context;
    return {[&field, x1](mesh::Vec2 p) {
      return field.eval(expr::Env::vars(x1, geom::reduce_periodic(p.x), p.y));
    }};
  }
  if (!m.is_rod)
    throw NumericalError("cell-mesh assembly needs an x1 context");
  double eps = m.rod_epsilon;
  return {[&field, eps](mesh::Vec2 p) {
    return field.eval(expr::Env::vars(p.x, geom::reduce_periodic(p.x / eps), p.y / eps));
  }};
}

ScalarCoefficient unit_weight() {
  return {[](mesh::Vec2) { return 1.0; }};
}

SparseMatrix assemble_stiffness(const mesh::TriMesh& m, const Mat2Coefficient& a,
                                const DofMap& dofs,
                                const std::vector<double>* element_scale) {
  TripletAccumulator acc(dofs.n_dofs);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    ElementFrame f = element_frame(m, static_cast<int>(t));
    auto coeff = a.at(m.centroid(static_cast<int>(t)));
    if (element_scale) {
      double s = (*element_scale)[t];
      coeff.a11 *= s;
      coeff.a12 *= s;
      coeff.a22 *= s;
    }
    const auto& tri = m.triangles[t];
    double ke[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        double qx = coeff.a11 * f.grad[j][0] + coeff.a12 * f.grad[j][1];
        double qy = coeff.a12 * f.grad[j][0] + coeff.a22 * f.grad[j][1];
        double v = f.area * (f.grad[i][0] * qx + f.grad[i][1] * qy);
        ke[i][j] = v;
        ke[j][i] = v;  // exact symmetry by mirroring
      }
    }
    for (int i = 0; i < 3; ++i) {
      int di = dofs.dof(tri[static_cast<std::size_t>(i)]);
      if (di == DofMap::kEliminated) continue;
      for (int j = 0; j < 3; ++j) {
        int dj = dofs.dof(tri[static_cast<std::size_t>(j)]);
        if (dj == DofMap::kEliminated) continue;
        acc.add(di, dj, ke[i][j]);
      }
    }
  }
  SparseMatrix K = acc.compress();
  K.symmetric = true;
  return K;
}

SparseMatrix assemble_stiffness(const mesh::TriMesh& m, const geom::CoefficientSet& a,
                                std::optional<double> x1_context, const DofMap& dofs) {
  return assemble_stiffness(m, matrix_on_mesh(m, a, x1_context), dofs);
}

SparseMatrix assemble_mass(const mesh::TriMesh& m, const ScalarCoefficient& weight,
                           const DofMap& dofs) {
  TripletAccumulator acc(dofs.n_dofs);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    double area = m.triangle_area(static_cast<int>(t));
    if (area <= 0.0) throw NumericalError("singular or inverted element Jacobian");
    double w = weight.at(m.centroid(static_cast<int>(t)));
    const auto& tri = m.triangles[t];
    double base = w * area / 12.0;
    for (int i = 0; i < 3; ++i) {
      int di = dofs.dof(tri[static_cast<std::size_t>(i)]);
      if (di == DofMap::kEliminated) continue;
      for (int j = 0; j < 3; ++j) {
        int dj = dofs.dof(tri[static_cast<std::size_t>(j)]);
        if (dj == DofMap::kEliminated) continue;
        acc.add(di, dj, base * (i == j ? 2.0 : 1.0));
      }
    }
  }
  SparseMatrix M = acc.compress();
  M.symmetric = true;
  return M;
}

SparseMatrix assemble_mass(const mesh::TriMesh& m, const expr::Expr* weight,
                           std::optional<double> x1_context, const DofMap& dofs) {
  if (!weight) return assemble_mass(m, unit_weight(), dofs);
  return assemble_mass(m, scalar_on_mesh(m, *weight, x1_context), dofs);
}

std::vector<double> assemble_corrector_rhs(const mesh::TriMesh& m, const Mat2Coefficient& a,
                                           int axis, const DofMap& dofs,
                                           const std::vector<double>* element_scale) {
  if (axis != 1 && axis != 2) throw NumericalError("corrector axis must be 1 or 2");
  std::vector<double> b(static_cast<std::size_t>(dofs.n_dofs), 0.0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    ElementFrame f = element_frame(m, static_cast<int>(t));
    mesh::Vec2 c = m.centroid(static_cast<int>(t));
    auto coeff = a.at(c);
    double w = element_scale ? (*element_scale)[t] : 1.0;
    // Column `axis` of a.
    double col0 = axis == 1 ? coeff.a11 : coeff.a12;
    double col1 = axis == 1 ? coeff.a12 : coeff.a22;
    const auto& tri = m.triangles[t];
    for (int i = 0; i < 3; ++i) {
      int di = dofs.dof(tri[static_cast<std::size_t>(i)]);
      if (di == DofMap::kEliminated) continue;
      b[static_cast<std::size_t>(di)] -=
          w * f.area * (col0 * f.grad[i][0] + col1 * f.grad[i][1]);
    }
  }
  return b;
}

std::vector<double> assemble_corrector_rhs(const mesh::TriMesh& m,
                                           const geom::CoefficientSet& a, int axis,
                                           std::optional<double> x1_context,
                                           const DofMap& dofs) {
  return assemble_corrector_rhs(m, matrix_on_mesh(m, a, x1_context), axis, dofs, nullptr);
}

std::array<double, 2> element_gradient(const mesh::TriMesh& m, int t,
                                       const std::vector<double>& vertex_values) {
  ElementFrame f = element_frame(m, t);
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  std::array<double, 2> g{0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    double v = vertex_values[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
    g[0] += v * f.grad[i][0];
    g[1] += v * f.grad[i][1];
  }
  return g;
}

double integrate_p1(const mesh::TriMesh& m, const std::vector<double>& vertex_values) {
  double acc = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    double mean = (vertex_values[static_cast<std::size_t>(tri[0])] +
                   vertex_values[static_cast<std::size_t>(tri[1])] +
                   vertex_values[static_cast<std::size_t>(tri[2])]) /
                  3.0;
    acc += m.triangle_area(static_cast<int>(t)) * mean;
  }
  return acc;
}

}  // namespace rodspec::fem
