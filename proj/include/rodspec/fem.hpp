#pragma once

#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "rodspec/mesh.hpp"

namespace rodspec::fem {

// Compressed-row symmetric sparse matrix. Assembly mirrors element blocks, so
// the symmetric flag guarantees value(i,j) == value(j,i) exactly.
struct SparseMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> cols;
  std::vector<double> vals;
  bool symmetric = true;

  void multiply(const double* x, double* y) const;
  std::vector<double> multiply(const std::vector<double>& x) const;
  double max_abs() const;

  // this + scale * other, pattern union (dimensions must match).
  SparseMatrix add_scaled(const SparseMatrix& other, double scale) const;
};

// Deterministic triplet accumulator: duplicates are merged in sorted order.
class TripletAccumulator {
 public:
  explicit TripletAccumulator(int n) : n_(n) {}
  void add(int row, int col, double value) { entries_.push_back({row, col, value}); }
  SparseMatrix compress() const;

 private:
  struct Entry {
    int row, col;
    double value;
  };
  int n_;
  std::vector<Entry> entries_;
};

// Vertex -> reduced dof index. Dirichlet vertices map to kEliminated and
// periodic slaves share their master's dof (alias chains have length one).
struct DofMap {
  static constexpr int kEliminated = -1;
  std::vector<int> vertex_to_dof;
  int n_dofs = 0;

  int dof(int vertex) const { return vertex_to_dof[static_cast<std::size_t>(vertex)]; }

  // Expands reduced dof values back to per-vertex values (eliminated -> 0).
  std::vector<double> expand(const std::vector<double>& dof_values) const;
};

// Identity map (every vertex its own dof).
DofMap identity_dofs(const mesh::TriMesh& m);

// Eliminates all vertices on boundary edges carrying one of `tags`.
DofMap apply_dirichlet(const mesh::TriMesh& m, const std::set<mesh::Tag>& tags);

// Aliases periodic slave vertices to their masters.
DofMap periodicify(const mesh::TriMesh& m);

// Dirichlet elimination and periodic aliasing combined; a vertex with both
// roles is an error.
DofMap build_dofs(const mesh::TriMesh& m, const std::set<mesh::Tag>& dirichlet_tags,
                  bool periodic);

// Coefficient evaluation per element happens at the centroid: cell meshes use
// the frozen slow variable x1_context, rod meshes evaluate at (x1, x/eps).
struct Mat2Coefficient {
  std::function<geom::CoefficientSet::Mat2(mesh::Vec2)> at;
};
struct ScalarCoefficient {
  std::function<double(mesh::Vec2)> at;
};

Mat2Coefficient matrix_on_mesh(const mesh::TriMesh& m, const geom::CoefficientSet& a,
                               std::optional<double> x1_context);
ScalarCoefficient scalar_on_mesh(const mesh::TriMesh& m, const expr::Expr& field,
                                 std::optional<double> x1_context);
ScalarCoefficient unit_weight();

// Stiffness \int a grad(u) . grad(v); symmetric PSD on the reduced dofs.
// `element_scale` multiplies the coefficient per element (the beta=2 weighted
// problem passes p1^2 at element centroids).
SparseMatrix assemble_stiffness(const mesh::TriMesh& m, const Mat2Coefficient& a,
                                const DofMap& dofs,
                                const std::vector<double>* element_scale = nullptr);
SparseMatrix assemble_stiffness(const mesh::TriMesh& m, const geom::CoefficientSet& a,
                                std::optional<double> x1_context, const DofMap& dofs);

// Consistent (not lumped) weighted mass \int w u v.
SparseMatrix assemble_mass(const mesh::TriMesh& m, const ScalarCoefficient& weight,
                           const DofMap& dofs);
SparseMatrix assemble_mass(const mesh::TriMesh& m, const expr::Expr* weight,
                           std::optional<double> x1_context, const DofMap& dofs);

// Right-hand side of the corrector problem along `axis` (1 or 2):
// b[phi] = -\int_Y w a_{i,axis} d_i phi.
std::vector<double> assemble_corrector_rhs(const mesh::TriMesh& m, const Mat2Coefficient& a,
                                           int axis, const DofMap& dofs,
                                           const std::vector<double>* element_scale = nullptr);
std::vector<double> assemble_corrector_rhs(const mesh::TriMesh& m,
                                           const geom::CoefficientSet& a, int axis,
                                           std::optional<double> x1_context,
                                           const DofMap& dofs);

// Elementwise-constant gradient of a P1 vertex field on triangle t.
std::array<double, 2> element_gradient(const mesh::TriMesh& m, int t,
                                       const std::vector<double>& vertex_values);

// \int over the mesh of a P1 vertex field (exact for P1).
double integrate_p1(const mesh::TriMesh& m, const std::vector<double>& vertex_values);

}  // namespace rodspec::fem
