#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "rodspec/geometry.hpp"

namespace rodspec::mesh {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class Tag : unsigned char { kLateral, kHole, kEndMinus, kEndPlus };

const char* tag_name(Tag t);

struct BoundaryEdge {
  int v0;
  int v1;
  Tag tag;
};

// Conforming triangle mesh of a perforated cell Y(x1) or of the rod Omega_eps.
// Cell meshes identify the y1 = +1/2 face with the y1 = -1/2 face through
// periodic_pairs (slave = master + (1,0)). All triangles are positively
// oriented.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;
  std::vector<std::pair<int, int>> periodic_pairs;  // (master, slave)
  double h = 0.0;                                   // nominal mesh size

  bool is_rod = false;
  double x1_slice = 0.0;     // cell meshes: frozen slow variable
  double rod_epsilon = 0.0;  // rod meshes: eps, 0 otherwise
  std::shared_ptr<const geom::CellGeometry> geometry;  // for boundary re-snaps

  double triangle_area(int t) const;
  Vec2 centroid(int t) const;
  double total_area() const;
  double min_angle_deg() const;

  // V - E + T of the raw planar complex (before periodic identification).
  int euler_characteristic() const;
};

// Triangulates the perforated cell at slice x1. The background grid has pitch
// h/2; triangles fully inside the hole are removed and cut vertices are
// snapped onto {F = 0} by bisection along incident edges.
TriMesh mesh_cell(const std::shared_ptr<const geom::CellGeometry>& geometry, double x1,
                  double h);

// Triangulates the rod by concatenating per-cell meshes frozen at the cell
// midpoints x1 = eps*j, with shared interface vertices and END tags at
// x1 = -1/2 and x1 = +1/2.
TriMesh mesh_rod(const std::shared_ptr<const geom::CellGeometry>& geometry,
                 const geom::RodGeometry& rod, double h_y);

// Uniform red refinement; midpoints of HOLE edges are re-snapped onto the
// level set and boundary tags are inherited.
TriMesh refine(const TriMesh& m);

// Plain-text dump: vertices / triangles / tags / periodic_pairs.
void dump_mesh(const TriMesh& m, std::ostream& os);

}  // namespace rodspec::mesh
