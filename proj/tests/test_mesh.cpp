#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "rodspec/mesh.hpp"
#include "test_helpers.hpp"

using namespace rodspec;
using testing::kDiskHole;
using testing::make_geometry;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("structured cell mesh without a hole") {
  auto g = make_geometry(nullptr);
  mesh::TriMesh m = mesh::mesh_cell(g, 0.0, 0.125);
  CHECK(m.triangles.size() == 512);  // 16 x 16 x 2
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.min_angle_deg() >= 44.9);
  CHECK(m.euler_characteristic() == 1);
  CHECK(m.periodic_pairs.size() == 17);
  for (const auto& e : m.boundary) CHECK(e.tag == mesh::Tag::kLateral);

  for (const auto& [master, slave] : m.periodic_pairs) {
    const mesh::Vec2& pm = m.vertices[static_cast<std::size_t>(master)];
    const mesh::Vec2& ps = m.vertices[static_cast<std::size_t>(slave)];
    CHECK(std::abs(ps.x - pm.x - 1.0) <= 1e-12);
    CHECK(std::abs(ps.y - pm.y) <= 1e-12);
  }
}

TEST_CASE("cut cell mesh matches the quadrature measure") {
  auto g = make_geometry(kDiskHole);
  mesh::TriMesh m = mesh::mesh_cell(g, 0.0, 1.0 / 32);
  double oracle = geom::cell_measure(*g, 0.0, 2048);
  CHECK(std::abs(m.total_area() - oracle) <= 5e-3);
  CHECK(m.euler_characteristic() == 0);  // annulus-like
  CHECK(m.min_angle_deg() >= 10.0);

  int hole_edges = 0;
  for (const auto& e : m.boundary) {
    if (e.tag != mesh::Tag::kHole) continue;
    ++hole_edges;
    for (int v : {e.v0, e.v1}) {
      const mesh::Vec2& p = m.vertices[static_cast<std::size_t>(v)];
      CHECK(std::abs(g->level_set_at(0.0, p.x, p.y)) <= 0.5 * m.h);
    }
  }
  CHECK(hole_edges > 0);

  // Refinement improves the polygonal hole approximation markedly.
  mesh::TriMesh r = mesh::refine(m);
  double err0 = std::abs(m.total_area() - oracle);
  double err1 = std::abs(r.total_area() - oracle);
  CHECK(err1 <= err0 / 2.0);
}

TEST_CASE("red refinement structure") {
  auto g = make_geometry(nullptr);
  mesh::TriMesh m = mesh::mesh_cell(g, 0.0, 0.125);
  mesh::TriMesh r = mesh::refine(m);
  CHECK(r.triangles.size() == 4 * m.triangles.size());
  CHECK(r.total_area() == doctest::Approx(m.total_area()).epsilon(1e-12));
  CHECK(r.periodic_pairs.size() == 33);  // 17 vertices + 16 edge midpoints
  for (const auto& [master, slave] : r.periodic_pairs) {
    const mesh::Vec2& pm = r.vertices[static_cast<std::size_t>(master)];
    const mesh::Vec2& ps = r.vertices[static_cast<std::size_t>(slave)];
    CHECK(std::abs(ps.x - pm.x - 1.0) <= 1e-12);
    CHECK(std::abs(ps.y - pm.y) <= 1e-12);
  }
}

TEST_CASE("every boundary edge carries exactly one tag") {
  auto g = make_geometry(kDiskHole);
  mesh::TriMesh m = mesh::mesh_cell(g, 0.0, 1.0 / 16);
  std::set<std::pair<int, int>> seen;
  for (const auto& e : m.boundary) {
    auto key = std::make_pair(std::min(e.v0, e.v1), std::max(e.v0, e.v1));
    CHECK(seen.insert(key).second);
  }
}

TEST_CASE("rod mesh of the unperforated rod") {
  auto g = make_geometry(nullptr);
  geom::RodGeometry rod(1);  // eps = 1/3
  mesh::TriMesh m = mesh::mesh_rod(g, rod, 0.125);
  CHECK(m.is_rod);
  CHECK(m.total_area() == doctest::Approx(rod.epsilon).epsilon(1e-12));
  CHECK(m.periodic_pairs.empty());

  int end_minus = 0, end_plus = 0;
  for (const auto& e : m.boundary) {
    CHECK(e.tag != mesh::Tag::kHole);
    if (e.tag == mesh::Tag::kEndMinus) ++end_minus;
    if (e.tag == mesh::Tag::kEndPlus) ++end_plus;
  }
  CHECK(end_minus == 16);
  CHECK(end_plus == 16);

  for (const mesh::Vec2& v : m.vertices) {
    CHECK(v.x >= -0.5 - 1e-12);
    CHECK(v.x <= 0.5 + 1e-12);
    CHECK(std::abs(v.y) <= rod.epsilon * 0.5 + 1e-12);
  }
}

TEST_CASE("perforated rod area scales with the cell measure") {
  auto g = make_geometry(kDiskHole);
  geom::RodGeometry rod(4);  // eps = 1/9
  mesh::TriMesh m = mesh::mesh_rod(g, rod, 1.0 / 16);
  double expected = rod.epsilon * (1.0 - kPi * 0.09);
  CHECK(std::abs(m.total_area() - expected) <= 0.01 * expected);
}

TEST_CASE("slowly varying hole: per-cell areas track the slice measure") {
  auto g = make_geometry("(y1^2 + y2^2)/(0.2 + 0.1*x1^2)^2 - 1");
  geom::RodGeometry rod(4);
  mesh::TriMesh m = mesh::mesh_rod(g, rod, 1.0 / 16);
  const double eps = rod.epsilon;
  std::map<int, double> cell_area;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    int j = static_cast<int>(std::lround(m.centroid(static_cast<int>(t)).x / eps));
    cell_area[j] += m.triangle_area(static_cast<int>(t));
  }
  for (int j = -rod.n_cells; j <= rod.n_cells; ++j) {
    double measured = cell_area[j] / (eps * eps);
    double expected = geom::cell_measure(*g, eps * j, 1024);
    CHECK(std::abs(measured - expected) <= 0.01 * expected);
  }
}

TEST_CASE("memory guard refuses oversized rod meshes") {
  auto g = make_geometry(nullptr);
  geom::RodGeometry rod(200);
  CHECK_THROWS_AS(mesh::mesh_rod(g, rod, 1.0 / 64), NumericalError);
}

TEST_CASE("under-resolved holes are rejected for rods") {
  auto g = make_geometry("(y1^2 + y2^2)/0.01 - 1");  // radius 0.1
  geom::RodGeometry rod(2);
  CHECK_THROWS_AS(mesh::mesh_rod(g, rod, 0.125), ConfigError);
}

TEST_CASE("mesh dump has the documented sections") {
  auto g = make_geometry(kDiskHole);
  mesh::TriMesh m = mesh::mesh_cell(g, 0.0, 0.125);
  std::ostringstream os;
  mesh::dump_mesh(m, os);
  std::string dump = os.str();
  CHECK(dump.find("vertices ") == 0);
  CHECK(dump.find("\ntriangles ") != std::string::npos);
  CHECK(dump.find("\ntags ") != std::string::npos);
  CHECK(dump.find("\nperiodic_pairs ") != std::string::npos);
  CHECK(dump.find("HOLE") != std::string::npos);
  CHECK(dump.find("LATERAL") != std::string::npos);
}

TEST_CASE("hole touching the cell boundary is a geometry error") {
  auto g = make_geometry("(y1^2 + y2^2)/0.36 - 1");  // radius 0.6 > 1/2
  CHECK_THROWS_AS(mesh::mesh_cell(g, 0.0, 0.125), HypothesisError);
}
