#include <doctest.h>

#include <cmath>

#include "rodspec/cell_problem.hpp"
#include "test_helpers.hpp"

using namespace rodspec;
using testing::kDiskHole;
using testing::make_coefficients;
using testing::make_geometry;

TEST_CASE("identity coefficients force the trivial correctors") {
  auto g = make_geometry(nullptr);
  auto coeffs = make_coefficients("1", "0", "1", "1");
  cell::CellSolution sol = cell::solve_cell(g, coeffs, 0.0, 1.0 / 16);

  for (double v : sol.n1.vertex_values) CHECK(std::abs(v) <= 1e-10);

  // N_2 = -y2 + const; the mean-zero gauge makes the constant vanish.
  for (std::size_t v = 0; v < sol.cell_mesh.vertices.size(); ++v)
    CHECK(std::abs(sol.n2.vertex_values[v] + sol.cell_mesh.vertices[v].y) <= 1e-8);

  CHECK(std::abs(sol.effective.A[0][0] - 1.0) <= 1e-8);
  CHECK(std::abs(sol.effective.A[0][1]) <= 1e-8);
  CHECK(std::abs(sol.effective.A[1][0]) <= 1e-8);
  CHECK(std::abs(sol.effective.A[1][1]) <= 1e-8);
}

TEST_CASE("layered coefficient reduces to the harmonic mean") {
  auto g = make_geometry(nullptr);
  auto coeffs =
      make_coefficients("2 + cos(2*pi*y1)", "0", "2 + cos(2*pi*y1)", "1", 0.5);
  cell::CellSolution sol = cell::solve_cell(g, coeffs, 0.0, 1.0 / 64);

  // N_1 depends on y1 only; the column-averaged axial flux a (1 + dN_1) is
  // the constant discrete flux of the layered 1D reduction.
  const int columns = 128;  // one bin per background square column (pitch 1/128)
  std::vector<double> flux(columns, 0.0), area(columns, 0.0);
  for (std::size_t t = 0; t < sol.cell_mesh.triangles.size(); ++t) {
    mesh::Vec2 c = sol.cell_mesh.centroid(static_cast<int>(t));
    auto grad = fem::element_gradient(sol.cell_mesh, static_cast<int>(t),
                                      sol.n1.vertex_values);
    double a = 2.0 + std::cos(2.0 * 3.14159265358979323846 * c.x);
    int col = std::clamp(static_cast<int>((c.x + 0.5) * columns), 0, columns - 1);
    double w = sol.cell_mesh.triangle_area(static_cast<int>(t));
    flux[static_cast<std::size_t>(col)] += w * a * (1.0 + grad[0]);
    area[static_cast<std::size_t>(col)] += w;
  }
  double flux_min = 1e30, flux_max = -1e30;
  for (int col = 0; col < columns; ++col) {
    double f = flux[static_cast<std::size_t>(col)] / area[static_cast<std::size_t>(col)];
    flux_min = std::min(flux_min, f);
    flux_max = std::max(flux_max, f);
  }
  CHECK(flux_max - flux_min <= 1e-3);
  CHECK(std::abs(0.5 * (flux_max + flux_min) - std::sqrt(3.0)) <= 5e-3);

  CHECK(std::abs(sol.effective.a_eff - std::sqrt(3.0)) <= 5e-3);
  CHECK(sol.effective.form_discrepancy <= 5e-3 * sol.effective.norm());
}

TEST_CASE("effective matrix structure for the disk hole") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("1", "0", "1", "1");
  cell::EffectiveMatrix coarse = cell::effective_matrix(g, coeffs, 0.0, 1.0 / 64);

  CHECK(coarse.A[0][1] == coarse.A[1][0]);  // energy form is mirrored
  CHECK(std::abs(coarse.A[0][1]) <= 5e-3 * coarse.norm());
  CHECK(std::abs(coarse.A[1][1]) <= 5e-3 * coarse.norm());
  CHECK(coarse.a_eff > 0.0);
  CHECK(coarse.a_eff < 1.0);  // the hole obstructs axial flow

  double tr = coarse.A[0][0] + coarse.A[1][1];
  double det = coarse.A[0][0] * coarse.A[1][1] - coarse.A[0][1] * coarse.A[1][0];
  CHECK(tr >= -1e-10 * coarse.norm());
  CHECK(det >= -1e-10 * coarse.norm() * coarse.norm());

  cell::EffectiveMatrix fine = cell::effective_matrix(g, coeffs, 0.0, 1.0 / 128);
  CHECK(std::abs(fine.A[1][1]) <= std::abs(coarse.A[1][1]) + 1e-12);
  CHECK(fine.form_discrepancy <= coarse.form_discrepancy + 1e-12);
}

TEST_CASE("disk-hole effective coefficient regression") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("1", "0", "1", "1");
  double a64 = cell::effective_matrix(g, coeffs, 0.0, 1.0 / 64).a_eff;
  double a128 = cell::effective_matrix(g, coeffs, 0.0, 1.0 / 128).a_eff;
  double extrapolated = (4.0 * a128 - a64) / 3.0;
  // Frozen from the h -> h/2 Richardson value of this configuration.
  CHECK(std::abs(extrapolated - 0.77864) <= 5e-4);
  CHECK(std::abs(a128 - extrapolated) <= std::abs(a64 - extrapolated));
}

TEST_CASE("effective matrix is invariant under hole translation") {
  auto coeffs = make_coefficients("1", "0", "1", "1");
  auto centered = make_geometry(kDiskHole);
  auto shifted = make_geometry("((y1 - 0.1)^2 + y2^2)/0.09 - 1");
  double a0 = cell::effective_matrix(centered, coeffs, 0.0, 1.0 / 64).a_eff;
  double a1 = cell::effective_matrix(shifted, coeffs, 0.0, 1.0 / 64).a_eff;
  CHECK(std::abs(a0 - a1) <= 1e-3);
}

TEST_CASE("effective matrix scales linearly with the coefficient") {
  auto g = make_geometry(kDiskHole);
  auto base = make_coefficients("1", "0.1", "2", "1");
  auto doubled = make_coefficients("2", "0.2", "4", "1");
  cell::EffectiveMatrix A1 = cell::effective_matrix(g, base, 0.0, 1.0 / 32);
  cell::EffectiveMatrix A2 = cell::effective_matrix(g, doubled, 0.0, 1.0 / 32);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      CHECK(std::abs(A2.A[i][k] - 2.0 * A1.A[i][k]) <= 1e-13 * std::max(1.0, A1.norm()));
}

TEST_CASE("constant potential gives the trivial cell eigenpair") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("1 + 0.3*cos(2*pi*y1)", "0", "1", "2.5", 0.2);
  cell::CellEigenData e = cell::solve_cell_eigen(g, coeffs, 0.0, 1.0 / 32);
  CHECK(std::abs(e.lambda1 - 2.5) <= 1e-8);
  CHECK(e.gap_to_second > 1e-8 * std::abs(e.lambda1));
  CHECK(e.positivity_ok);
  for (double v : e.p1) CHECK(std::abs(v - 1.0) <= 1e-7);
}

TEST_CASE("oscillating potential: cell eigenvalue within the min/max bounds") {
  auto g = make_geometry(nullptr);
  auto coeffs = make_coefficients("1", "0", "1", "1 + 0.2*cos(2*pi*y1)");
  cell::CellEigenData e = cell::solve_cell_eigen(g, coeffs, 0.0, 1.0 / 32);
  CHECK(e.lambda1 > 0.8);
  CHECK(e.lambda1 < 1.2);
  // Variational bound with the constant test function: lambda_1 <= cbar = 1.
  CHECK(e.lambda1 <= 1.0 + 1e-9);
  CHECK(e.positivity_ok);
}

TEST_CASE("additive x1 dependence shifts the cell eigenvalue exactly") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("1", "0", "1", "1 + 0.2*cos(2*pi*y1) + x1^2", 0.2);
  cell::CellEigenData e0 = cell::solve_cell_eigen(g, coeffs, 0.0, 1.0 / 32);
  cell::CellEigenData e3 = cell::solve_cell_eigen(g, coeffs, 0.3, 1.0 / 32);
  CHECK(std::abs((e3.lambda1 - e0.lambda1) - 0.09) <= 1e-8);

  double curvature = cell::lambda1_curvature(g, coeffs, 1.0 / 32, 0.05);
  CHECK(std::abs(curvature - 2.0) <= 5e-2);
}

TEST_CASE("beta2 quantities: x1-independent data gives zero drift") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("1", "0", "1", "1 + 0.2*cos(2*pi*y1)", 0.2);
  cell::Beta2Effective b2 = cell::beta2_effective(g, coeffs, 1.0 / 32);
  CHECK(std::abs(b2.c_eff) <= 1e-6);
  CHECK(std::abs(b2.lambda1_curvature) <= 5e-2);
  CHECK(b2.a_eff_w > 0.0);
}

TEST_CASE("constant cell eigenfunction reduces the weighted corrector") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("2 + cos(2*pi*y1)", "0", "1.5", "3", 0.2);
  cell::Beta2Effective b2 = cell::beta2_effective(g, coeffs, 1.0 / 32);
  double a_plain = cell::effective_matrix(g, coeffs, 0.0, 1.0 / 32).a_eff;
  CHECK(std::abs(b2.a_eff_w - a_plain) <= 1e-10 * std::max(1.0, a_plain));
}

TEST_CASE("beta2 drift is stable under halving the x1 step") {
  // The sin/cos pairing keeps the drift integrand from cancelling by parity.
  auto g = make_geometry(nullptr);
  auto coeffs = make_coefficients("1 + 0.2*x1*sin(2*pi*y1)", "0", "1",
                                  "1 + (0.3 + x1)*cos(2*pi*y1)", 0.2);
  cell::Beta2Effective d1 = cell::beta2_effective(g, coeffs, 1.0 / 32, 1e-3);
  cell::Beta2Effective d2 = cell::beta2_effective(g, coeffs, 1.0 / 32, 5e-4);
  CHECK(std::abs(d1.c_eff) > 1e-6);
  CHECK(std::abs(d1.c_eff - d2.c_eff) <= 1e-3 * std::abs(d1.c_eff));
}

TEST_CASE("mean-zero gauge holds for the correctors") {
  auto g = make_geometry(kDiskHole);
  auto coeffs = make_coefficients("2 + cos(2*pi*y1)", "0.1", "1", "1", 0.2);
  cell::CellSolution sol = cell::solve_cell(g, coeffs, 0.0, 1.0 / 32);
  for (const cell::CorrectorField* f : {&sol.n1, &sol.n2}) {
    double mean = fem::integrate_p1(sol.cell_mesh, f->vertex_values) /
                  sol.cell_mesh.total_area();
    CHECK(std::abs(mean) <= 1e-10);
  }
}

TEST_CASE("corrector convenience overload matches the cell solution") {
  auto g = make_geometry(nullptr);
  auto coeffs = make_coefficients("2 + cos(2*pi*y1)", "0", "1", "1", 0.2);
  cell::CellSolution sol = cell::solve_cell(g, coeffs, 0.0, 1.0 / 16);
  cell::CorrectorField n1 = cell::solve_corrector(g, coeffs, 0.0, 1.0 / 16, 1);
  REQUIRE(n1.vertex_values.size() == sol.n1.vertex_values.size());
  for (std::size_t v = 0; v < n1.vertex_values.size(); ++v)
    CHECK(n1.vertex_values[v] == doctest::Approx(sol.n1.vertex_values[v]).epsilon(1e-12));
}
