#include "rodspec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <ostream>
#include <sstream>

#include "rodspec/errors.hpp"

namespace rodspec::mesh {

namespace {

constexpr double kMinAngleDeg = 10.0;

double cross(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double angle_at(const Vec2& a, const Vec2& b, const Vec2& c) {
  double ux = b.x - a.x, uy = b.y - a.y;
  double vx = c.x - a.x, vy = c.y - a.y;
  double nu = std::hypot(ux, uy), nv = std::hypot(vx, vy);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double cosv = std::clamp((ux * vx + uy * vy) / (nu * nv), -1.0, 1.0);
  return std::acos(cosv) * 180.0 / 3.14159265358979323846;
}

// Finds t in (0, 1] with F(p + t (q - p)) = 0 given F(p) < 0 <= F(q).
double bisect_crossing(const std::function<double(Vec2)>& level, Vec2 p, Vec2 q) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    Vec2 m{p.x + mid * (q.x - p.x), p.y + mid * (q.y - p.y)};
    if (level(m) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

struct CellMeshBuild {
  TriMesh mesh;
  bool angle_ok = true;
  int max_inside_run = 0;  // longest straight run of grid vertices in the hole
};

// One attempt at the cut-and-snap cell mesh; the caller retries at h/2 when
// the snapped mesh violates the angle bound.
CellMeshBuild build_cell_mesh(const std::shared_ptr<const geom::CellGeometry>& geometry,
                              double x1, double h) {
  const geom::CellGeometry& g = *geometry;
  const double w = g.cross_section.half_width;
  const int n1 = std::max(2, static_cast<int>(std::lround(2.0 / h)));
  const int n2 = std::max(2, static_cast<int>(std::lround(4.0 * w / h)));

  auto vid = [&](int i, int j) { return i * (n2 + 1) + j; };
  std::vector<Vec2> pts(static_cast<std::size_t>((n1 + 1) * (n2 + 1)));
  std::vector<double> level(pts.size(), 1.0);
  for (int i = 0; i <= n1; ++i) {
    double y1 = -0.5 + static_cast<double>(i) / n1;
    for (int j = 0; j <= n2; ++j) {
      double y2 = -w + 2.0 * w * static_cast<double>(j) / n2;
      pts[static_cast<std::size_t>(vid(i, j))] = {y1, y2};
      if (g.hole_present)
        level[static_cast<std::size_t>(vid(i, j))] = g.level_set_at(x1, y1, y2);
    }
  }

  int max_inside_run = 0;
  if (g.hole_present) {
    for (int i = 0; i <= n1; ++i)
      for (int j = 0; j <= n2; ++j)
        if ((i == 0 || i == n1 || j == 0 || j == n2) &&
            level[static_cast<std::size_t>(vid(i, j))] <= 0.0)
          throw HypothesisError("hole touches the cell boundary at x1=" + std::to_string(x1));
    for (int j = 0; j <= n2; ++j) {
      int run = 0;
      for (int i = 0; i <= n1; ++i) {
        run = level[static_cast<std::size_t>(vid(i, j))] < 0.0 ? run + 1 : 0;
        max_inside_run = std::max(max_inside_run, run);
      }
    }
  }

  std::vector<std::array<int, 3>> all_tris;
  all_tris.reserve(static_cast<std::size_t>(2 * n1 * n2));
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      all_tris.push_back({a, b, c});
      all_tris.push_back({a, c, d});
    }
  }

  if (g.hole_present) {
    auto level_at = [&](Vec2 p) { return g.level_set_at(x1, p.x, p.y); };

    // Pre-snap: vertices whose edge crossing lies within a quarter of the
    // edge move onto the level set first; this absorbs the sliver-producing
    // near-vertex crossings. All crossings are computed from the pristine
    // grid, so the pass is order independent.
    std::vector<double> snap_dist(pts.size(), std::numeric_limits<double>::infinity());
    std::vector<Vec2> snap_to(pts.size());
    auto consider = [&](int vneg, int vpos) {
      const Vec2& p = pts[static_cast<std::size_t>(vneg)];
      const Vec2& q = pts[static_cast<std::size_t>(vpos)];
      double t = bisect_crossing(level_at, p, q);
      double len = std::hypot(q.x - p.x, q.y - p.y);
      Vec2 cross{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
      double d_neg = t * len;
      double d_pos = (1.0 - t) * len;
      if (d_neg < 0.25 * len && d_neg < snap_dist[static_cast<std::size_t>(vneg)]) {
        snap_dist[static_cast<std::size_t>(vneg)] = d_neg;
        snap_to[static_cast<std::size_t>(vneg)] = cross;
      }
      if (d_pos < 0.25 * len && d_pos < snap_dist[static_cast<std::size_t>(vpos)]) {
        snap_dist[static_cast<std::size_t>(vpos)] = d_pos;
        snap_to[static_cast<std::size_t>(vpos)] = cross;
      }
    };
    std::set<std::pair<int, int>> seen;
    for (const auto& t : all_tris)
      for (int e = 0; e < 3; ++e) {
        int u = t[static_cast<std::size_t>(e)];
        int v = t[static_cast<std::size_t>((e + 1) % 3)];
        auto key = std::make_pair(std::min(u, v), std::max(u, v));
        if (!seen.insert(key).second) continue;
        double lu = level[static_cast<std::size_t>(u)];
        double lv = level[static_cast<std::size_t>(v)];
        if (lu < 0.0 && lv > 0.0)
          consider(u, v);
        else if (lv < 0.0 && lu > 0.0)
          consider(v, u);
      }
    for (std::size_t v = 0; v < pts.size(); ++v) {
      if (!std::isfinite(snap_dist[v])) continue;
      pts[v] = snap_to[v];
      level[v] = 0.0;
    }
  }

  // Keep triangles with any vertex strictly in the material; the rest (all
  // vertices inside or on the interface) belong to the hole.
  std::vector<std::array<int, 3>> tris;
  for (const auto& t : all_tris) {
    double mx = std::max({level[static_cast<std::size_t>(t[0])],
                          level[static_cast<std::size_t>(t[1])],
                          level[static_cast<std::size_t>(t[2])]});
    if (mx > 0.0) tris.push_back(t);
  }

  // Project the remaining interior vertices of kept triangles onto the level
  // set along the nearest crossing toward a strictly-outside neighbor.
  if (g.hole_present) {
    auto level_at = [&](Vec2 p) { return g.level_set_at(x1, p.x, p.y); };
    std::vector<std::vector<int>> neighbors(pts.size());
    for (const auto& t : tris)
      for (int e = 0; e < 3; ++e) {
        int u = t[static_cast<std::size_t>(e)];
        int v = t[static_cast<std::size_t>((e + 1) % 3)];
        neighbors[static_cast<std::size_t>(u)].push_back(v);
        neighbors[static_cast<std::size_t>(v)].push_back(u);
      }
    for (int v = 0; v < static_cast<int>(pts.size()); ++v) {
      if (level[static_cast<std::size_t>(v)] >= 0.0 ||
          neighbors[static_cast<std::size_t>(v)].empty())
        continue;
      double best_dist = std::numeric_limits<double>::infinity();
      Vec2 best{};
      for (int u : neighbors[static_cast<std::size_t>(v)]) {
        if (level[static_cast<std::size_t>(u)] <= 0.0) continue;
        Vec2 p = pts[static_cast<std::size_t>(v)];
        Vec2 q = pts[static_cast<std::size_t>(u)];
        double t = bisect_crossing(level_at, p, q);
        Vec2 candidate{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        double dist = std::hypot(candidate.x - p.x, candidate.y - p.y);
        if (dist < best_dist) {
          best_dist = dist;
          best = candidate;
        }
      }
      if (!std::isfinite(best_dist))
        throw NumericalError("cut vertex has no snap target; refine the cell mesh");
      pts[static_cast<std::size_t>(v)] = best;
      level[static_cast<std::size_t>(v)] = 0.0;
    }
  }

  // Relax interior vertices near the cut: guarded Laplacian sweeps open up
  // the thin triangles the projection leaves behind. Grid-boundary and
  // interface vertices stay fixed.
  if (g.hole_present) {
    std::vector<char> movable(pts.size(), 0);
    std::vector<std::vector<int>> neighbors(pts.size());
    std::vector<std::vector<int>> incident(pts.size());
    for (std::size_t ti = 0; ti < tris.size(); ++ti)
      for (int e = 0; e < 3; ++e) {
        int u = tris[ti][static_cast<std::size_t>(e)];
        int v = tris[ti][static_cast<std::size_t>((e + 1) % 3)];
        neighbors[static_cast<std::size_t>(u)].push_back(v);
        neighbors[static_cast<std::size_t>(v)].push_back(u);
        incident[static_cast<std::size_t>(u)].push_back(static_cast<int>(ti));
      }
    for (int i = 0; i <= n1; ++i)
      for (int j = 0; j <= n2; ++j) {
        int v = vid(i, j);
        bool on_grid_boundary = i == 0 || i == n1 || j == 0 || j == n2;
        movable[static_cast<std::size_t>(v)] =
            !on_grid_boundary && level[static_cast<std::size_t>(v)] > 0.0 &&
            !neighbors[static_cast<std::size_t>(v)].empty();
      }
    auto signed_area = [&](const std::array<int, 3>& t) {
      return cross(pts[static_cast<std::size_t>(t[0])], pts[static_cast<std::size_t>(t[1])],
                   pts[static_cast<std::size_t>(t[2])]);
    };
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (std::size_t v = 0; v < pts.size(); ++v) {
        if (!movable[v]) continue;
        // Only vertices touching the interface ring need relaxing.
        bool near_cut = false;
        for (int u : neighbors[v])
          if (level[static_cast<std::size_t>(u)] == 0.0) near_cut = true;
        if (!near_cut) continue;
        Vec2 mean{0.0, 0.0};
        for (int u : neighbors[v]) {
          mean.x += pts[static_cast<std::size_t>(u)].x;
          mean.y += pts[static_cast<std::size_t>(u)].y;
        }
        double inv = 1.0 / static_cast<double>(neighbors[v].size());
        mean.x *= inv;
        mean.y *= inv;
        Vec2 old = pts[v];
        pts[v] = mean;
        for (int ti : incident[v])
          if (signed_area(tris[static_cast<std::size_t>(ti)]) <= 0.0) {
            pts[v] = old;
            break;
          }
      }
    }
  }

  // Compact unused vertices.
  std::vector<int> remap(pts.size(), -1);
  TriMesh m;
  for (const auto& t : tris)
    for (int v : t)
      if (remap[static_cast<std::size_t>(v)] < 0) {
        remap[static_cast<std::size_t>(v)] = static_cast<int>(m.vertices.size());
        m.vertices.push_back(pts[static_cast<std::size_t>(v)]);
      }
  for (const auto& t : tris)
    m.triangles.push_back({remap[static_cast<std::size_t>(t[0])],
                           remap[static_cast<std::size_t>(t[1])],
                           remap[static_cast<std::size_t>(t[2])]});

  for (int j = 0; j <= n2; ++j) {
    int master = remap[static_cast<std::size_t>(vid(0, j))];
    int slave = remap[static_cast<std::size_t>(vid(n1, j))];
    if (master < 0 || slave < 0)
      throw NumericalError("periodic face vertex lost during meshing");
    m.periodic_pairs.emplace_back(master, slave);
  }

  // Boundary edges: incidence count one. Periodic face edges are interior on
  // the torus and carry no tag.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      int u = t[static_cast<std::size_t>(e)];
      int v = t[static_cast<std::size_t>((e + 1) % 3)];
      edge_count[{std::min(u, v), std::max(u, v)}]++;
    }
  const double tol = 1e-12;
  for (const auto& [edge, count] : edge_count) {
    if (count != 1) continue;
    const Vec2& p = m.vertices[static_cast<std::size_t>(edge.first)];
    const Vec2& q = m.vertices[static_cast<std::size_t>(edge.second)];
    bool on_face = (std::abs(p.x + 0.5) < tol && std::abs(q.x + 0.5) < tol) ||
                   (std::abs(p.x - 0.5) < tol && std::abs(q.x - 0.5) < tol);
    if (on_face) continue;
    bool lateral = (std::abs(p.y - w) < tol && std::abs(q.y - w) < tol) ||
                   (std::abs(p.y + w) < tol && std::abs(q.y + w) < tol);
    m.boundary.push_back({edge.first, edge.second, lateral ? Tag::kLateral : Tag::kHole});
  }

  m.h = h;
  m.is_rod = false;
  m.x1_slice = x1;
  m.geometry = geometry;

  CellMeshBuild out;
  out.mesh = std::move(m);
  out.max_inside_run = max_inside_run;
  for (std::size_t t = 0; t < out.mesh.triangles.size(); ++t) {
    if (out.mesh.triangle_area(static_cast<int>(t)) <= 0.0) {
      out.angle_ok = false;
      return out;
    }
  }
  out.angle_ok = out.mesh.min_angle_deg() >= kMinAngleDeg;
  return out;
}

}  // namespace

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::kLateral:
      return "LATERAL";
    case Tag::kHole:
      return "HOLE";
    case Tag::kEndMinus:
      return "END_MINUS";
    case Tag::kEndPlus:
      return "END_PLUS";
  }
  return "?";
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  return 0.5 * cross(vertices[static_cast<std::size_t>(tri[0])],
                     vertices[static_cast<std::size_t>(tri[1])],
                     vertices[static_cast<std::size_t>(tri[2])]);
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Vec2& a = vertices[static_cast<std::size_t>(tri[0])];
  const Vec2& b = vertices[static_cast<std::size_t>(tri[1])];
  const Vec2& c = vertices[static_cast<std::size_t>(tri[2])];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double TriMesh::total_area() const {
  double area = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t)
    area += triangle_area(static_cast<int>(t));
  return area;
}

double TriMesh::min_angle_deg() const {
  double min_angle = 180.0;
  for (const auto& tri : triangles) {
    const Vec2& a = vertices[static_cast<std::size_t>(tri[0])];
    const Vec2& b = vertices[static_cast<std::size_t>(tri[1])];
    const Vec2& c = vertices[static_cast<std::size_t>(tri[2])];
    min_angle = std::min({min_angle, angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
  }
  return min_angle;
}

int TriMesh::euler_characteristic() const {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : triangles)
    for (int e = 0; e < 3; ++e) {
      int u = t[static_cast<std::size_t>(e)];
      int v = t[static_cast<std::size_t>((e + 1) % 3)];
      edges[{std::min(u, v), std::max(u, v)}]++;
    }
  return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(triangles.size());
}

TriMesh mesh_cell(const std::shared_ptr<const geom::CellGeometry>& geometry, double x1,
                  double h) {
  if (!(h > 0.0) || h > 0.125 + 1e-12)
    throw ConfigError("cell mesh size must satisfy 0 < h <= 1/8");
  bool first_ok = false;
  CellMeshBuild build;
  try {
    build = build_cell_mesh(geometry, x1, h);
    first_ok = build.angle_ok;
  } catch (const NumericalError&) {
    first_ok = false;
  }
  if (!first_ok) {
    build = build_cell_mesh(geometry, x1, 0.5 * h);
    if (!build.angle_ok)
      throw NumericalError("cell mesh at x1=" + std::to_string(x1) +
                           " violates the minimum angle bound even after refinement"
                           " (min angle " +
                           std::to_string(build.mesh.min_angle_deg()) + " deg)");
  }
  return build.mesh;
}

TriMesh mesh_rod(const std::shared_ptr<const geom::CellGeometry>& geometry,
                 const geom::RodGeometry& rod, double h_y) {
  const double eps = rod.epsilon;
  const double w = geometry->cross_section.half_width;
  const int n1 = std::max(2, static_cast<int>(std::lround(2.0 / h_y)));
  const int n2 = std::max(2, static_cast<int>(std::lround(4.0 * w / h_y)));
  const int cells = 2 * rod.n_cells + 1;

  long long estimate = static_cast<long long>(cells) * (n1 + 1) * (n2 + 1);
  if (estimate > 2'000'000)
    throw NumericalError("rod mesh would need ~" + std::to_string(estimate) +
                         " vertices (> 2e6); use a coarser h_y");

  TriMesh out;
  out.is_rod = true;
  out.rod_epsilon = eps;
  out.h = h_y;
  out.geometry = geometry;

  std::map<std::pair<double, double>, int> global;
  auto add_vertex = [&](Vec2 p) {
    auto [it, inserted] = global.try_emplace({p.x, p.y}, static_cast<int>(out.vertices.size()));
    if (inserted) out.vertices.push_back(p);
    return it->second;
  };

  for (int j = -rod.n_cells; j <= rod.n_cells; ++j) {
    double x1_j = eps * j;
    CellMeshBuild build = build_cell_mesh(geometry, x1_j, h_y);
    if (!build.angle_ok)
      throw NumericalError("rod cell mesh at x1=" + std::to_string(x1_j) +
                           " violates the minimum angle bound; use a finer h_y");
    if (geometry->hole_present && build.max_inside_run < 7)
      throw ConfigError("h_y does not resolve the hole at x1=" + std::to_string(x1_j) +
                        " (need >= 8 vertices across)");
    const TriMesh& cell = build.mesh;
    std::vector<int> remap(cell.vertices.size());
    for (std::size_t v = 0; v < cell.vertices.size(); ++v) {
      const Vec2& y = cell.vertices[v];
      // Interface coordinates eps*(j +- 1/2) agree bitwise between cells.
      remap[v] = add_vertex({eps * (j + y.x), eps * y.y});
    }
    for (const auto& tri : cell.triangles)
      out.triangles.push_back({remap[static_cast<std::size_t>(tri[0])],
                               remap[static_cast<std::size_t>(tri[1])],
                               remap[static_cast<std::size_t>(tri[2])]});
  }

  // Boundary of the welded mesh.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : out.triangles)
    for (int e = 0; e < 3; ++e) {
      int u = t[static_cast<std::size_t>(e)];
      int v = t[static_cast<std::size_t>((e + 1) % 3)];
      edge_count[{std::min(u, v), std::max(u, v)}]++;
    }
  const double tol = 1e-12;
  for (const auto& [edge, count] : edge_count) {
    if (count != 1) continue;
    const Vec2& p = out.vertices[static_cast<std::size_t>(edge.first)];
    const Vec2& q = out.vertices[static_cast<std::size_t>(edge.second)];
    Tag tag;
    if (std::abs(p.x + 0.5) < tol && std::abs(q.x + 0.5) < tol)
      tag = Tag::kEndMinus;
    else if (std::abs(p.x - 0.5) < tol && std::abs(q.x - 0.5) < tol)
      tag = Tag::kEndPlus;
    else if ((std::abs(p.y - eps * w) < tol && std::abs(q.y - eps * w) < tol) ||
             (std::abs(p.y + eps * w) < tol && std::abs(q.y + eps * w) < tol))
      tag = Tag::kLateral;
    else
      tag = Tag::kHole;
    out.boundary.push_back({edge.first, edge.second, tag});
  }
  return out;
}

TriMesh refine(const TriMesh& m) {
  TriMesh out;
  out.vertices = m.vertices;
  out.h = 0.5 * m.h;
  out.is_rod = m.is_rod;
  out.x1_slice = m.x1_slice;
  out.rod_epsilon = m.rod_epsilon;
  out.geometry = m.geometry;

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int u, int v) {
    auto key = std::make_pair(std::min(u, v), std::max(u, v));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Vec2& p = out.vertices[static_cast<std::size_t>(u)];
    const Vec2& q = out.vertices[static_cast<std::size_t>(v)];
    int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
    midpoint.emplace(key, id);
    return id;
  };

  for (const auto& t : m.triangles) {
    int m01 = mid(t[0], t[1]);
    int m12 = mid(t[1], t[2]);
    int m20 = mid(t[2], t[0]);
    out.triangles.push_back({t[0], m01, m20});
    out.triangles.push_back({t[1], m12, m01});
    out.triangles.push_back({t[2], m20, m12});
    out.triangles.push_back({m01, m12, m20});
  }

  // Child boundary edges inherit the parent tag; HOLE midpoints return to the
  // level set along the chord normal.
  for (const BoundaryEdge& e : m.boundary) {
    int mv = mid(e.v0, e.v1);
    if (e.tag == Tag::kHole && m.geometry && m.geometry->hole_present) {
      Vec2& p = out.vertices[static_cast<std::size_t>(mv)];
      const Vec2& a = out.vertices[static_cast<std::size_t>(e.v0)];
      const Vec2& b = out.vertices[static_cast<std::size_t>(e.v1)];
      double nx = -(b.y - a.y), ny = b.x - a.x;
      double len = std::hypot(nx, ny);
      if (len > 0) {
        nx /= len;
        ny /= len;
        auto level_at = [&](Vec2 z) {
          if (m.is_rod) {
            double cell_x1 = m.rod_epsilon * std::round(z.x / m.rod_epsilon);
            return m.geometry->level_set_at(cell_x1, z.x / m.rod_epsilon,
                                            z.y / m.rod_epsilon);
          }
          return m.geometry->level_set_at(m.x1_slice, z.x, z.y);
        };
        double f0 = level_at(p);
        double reach = 0.5 * len;
        for (double dir : {1.0, -1.0}) {
          Vec2 q{p.x + dir * reach * nx, p.y + dir * reach * ny};
          double f1 = level_at(q);
          if ((f0 < 0.0) != (f1 < 0.0)) {
            Vec2 lo = f0 < 0.0 ? p : q;
            Vec2 hi = f0 < 0.0 ? q : p;
            double t = bisect_crossing(level_at, lo, hi);
            p = {lo.x + t * (hi.x - lo.x), lo.y + t * (hi.y - lo.y)};
            break;
          }
        }
      }
    }
    out.boundary.push_back({e.v0, mv, e.tag});
    out.boundary.push_back({mv, e.v1, e.tag});
  }

  // Periodic pairs: endpoints keep their pairing, face-edge midpoints pair up.
  out.periodic_pairs = m.periodic_pairs;
  if (!m.periodic_pairs.empty()) {
    std::map<int, int> master_of;  // slave -> master
    for (const auto& [master, slave] : m.periodic_pairs) master_of[slave] = master;
    for (const auto& [key, mv] : midpoint) {
      auto it0 = master_of.find(key.first);
      auto it1 = master_of.find(key.second);
      if (it0 == master_of.end() || it1 == master_of.end()) continue;
      auto master_key = std::make_pair(std::min(it0->second, it1->second),
                                       std::max(it0->second, it1->second));
      auto mit = midpoint.find(master_key);
      if (mit != midpoint.end()) out.periodic_pairs.emplace_back(mit->second, mv);
    }
  }

  for (std::size_t t = 0; t < out.triangles.size(); ++t)
    if (out.triangle_area(static_cast<int>(t)) <= 0.0)
      throw NumericalError("refinement produced an inverted triangle");
  return out;
}

void dump_mesh(const TriMesh& m, std::ostream& os) {
  os << "vertices " << m.vertices.size() << "\n";
  char buf[80];
  for (const Vec2& v : m.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    os << buf;
  }
  os << "triangles " << m.triangles.size() << "\n";
  for (const auto& t : m.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
  os << "tags " << m.boundary.size() << "\n";
  for (const BoundaryEdge& e : m.boundary)
    os << e.v0 << ' ' << e.v1 << ' ' << tag_name(e.tag) << "\n";
  os << "periodic_pairs " << m.periodic_pairs.size() << "\n";
  for (const auto& [master, slave] : m.periodic_pairs) os << master << ' ' << slave << "\n";
}

}  // namespace rodspec::mesh
