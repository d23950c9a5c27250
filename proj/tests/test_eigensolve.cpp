#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "rodspec/eigensolve.hpp"
#include "test_helpers.hpp"

using namespace rodspec;
using testing::make_coefficients;
using testing::make_geometry;

namespace {

constexpr double kPi = 3.14159265358979323846;

fem::SparseMatrix diag_matrix(const std::vector<double>& d) {
  fem::SparseMatrix A;
  A.n = static_cast<int>(d.size());
  A.symmetric = true;
  A.row_ptr.push_back(0);
  for (int i = 0; i < A.n; ++i) {
    A.cols.push_back(i);
    A.vals.push_back(d[static_cast<std::size_t>(i)]);
    A.row_ptr.push_back(i + 1);
  }
  return A;
}

fem::SparseMatrix dirichlet_laplacian_1d(int n, double h) {
  fem::SparseMatrix A;
  A.n = n;
  A.symmetric = true;
  A.row_ptr.push_back(0);
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      A.cols.push_back(i - 1);
      A.vals.push_back(-1.0 / (h * h));
    }
    A.cols.push_back(i);
    A.vals.push_back(2.0 / (h * h));
    if (i + 1 < n) {
      A.cols.push_back(i + 1);
      A.vals.push_back(-1.0 / (h * h));
    }
    A.row_ptr.push_back(static_cast<int>(A.cols.size()));
  }
  return A;
}

fem::SparseMatrix dense_to_sparse(const Eigen::MatrixXd& D) {
  fem::SparseMatrix A;
  A.n = static_cast<int>(D.rows());
  A.symmetric = true;
  A.row_ptr.push_back(0);
  for (int i = 0; i < A.n; ++i) {
    for (int j = 0; j < A.n; ++j) {
      A.cols.push_back(j);
      A.vals.push_back(D(i, j));
    }
    A.row_ptr.push_back(static_cast<int>(A.cols.size()));
  }
  return A;
}

}  // namespace

TEST_CASE("ldlt solves a diagonal system") {
  fem::SparseMatrix A = diag_matrix({1, 2, 3});
  eig::LdltFactor f = eig::ldlt_factor(A);
  REQUIRE(f.usable());
  std::vector<double> x = f.solve({1, 2, 3});
  for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ldlt residual contract on the 1D Laplacian") {
  const int n = 200;
  const double h = 1.0 / (n + 1);
  fem::SparseMatrix A = dirichlet_laplacian_1d(n, h);
  eig::LdltFactor f = eig::ldlt_factor(A);
  REQUIRE(f.usable());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> b(n);
  for (double& v : b) v = uni(rng);
  std::vector<double> x = f.solve(b);
  std::vector<double> r = A.multiply(x);
  double rn = 0.0, bn = 0.0;
  for (int i = 0; i < n; ++i) {
    rn += (r[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) *
          (r[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
    bn += b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
  }
  CHECK(std::sqrt(rn) <= 1e-10 * std::sqrt(bn));
}

TEST_CASE("ldlt reports inertia") {
  fem::SparseMatrix A = diag_matrix({-1, 2, 3});
  eig::LdltFactor f(A);
  CHECK(f.usable());
  CHECK(f.negative_pivots() == 1);
}

TEST_CASE("smallest pairs of a diagonal pencil") {
  fem::SparseMatrix K = diag_matrix({1, 2, 3});
  fem::SparseMatrix M = eig::identity_matrix(3);
  eig::LanczosOptions opts;
  opts.count = 2;
  auto pairs = eig::smallest_eigenpairs(K, M, opts);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pairs[1].value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(std::abs(pairs[0].vector[0]) - 1.0) <= 1e-8);
  CHECK(std::abs(pairs[0].vector[1]) <= 1e-8);
  CHECK(std::abs(std::abs(pairs[1].vector[1]) - 1.0) <= 1e-8);
}

TEST_CASE("a shift placed exactly on an eigenvalue retries and succeeds") {
  fem::SparseMatrix K = diag_matrix({1, 2, 3});
  fem::SparseMatrix M = eig::identity_matrix(3);
  eig::LanczosOptions opts;
  opts.count = 2;
  opts.shift = 2.0;  // singular K - sigma M
  auto pairs = eig::smallest_eigenpairs(K, M, opts);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pairs[1].value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("discrete Dirichlet Laplacian eigenvalues match the closed form") {
  const int n = 200;
  const double h = 1.0 / (n + 1);
  fem::SparseMatrix K = dirichlet_laplacian_1d(n, h);
  fem::SparseMatrix M = eig::identity_matrix(n);
  eig::LanczosOptions opts;
  opts.count = 3;
  opts.tol = 1e-11;
  auto pairs = eig::smallest_eigenpairs(K, M, opts);
  for (int k = 1; k <= 3; ++k) {
    double exact = 2.0 / (h * h) * (1.0 - std::cos(k * kPi * h));
    CHECK(std::abs(pairs[static_cast<std::size_t>(k - 1)].value - exact) <= 1e-10 * exact);
  }
}

TEST_CASE("residuals meet the requested tolerance") {
  const int n = 150;
  fem::SparseMatrix K = dirichlet_laplacian_1d(n, 1.0 / (n + 1));
  fem::SparseMatrix M = eig::identity_matrix(n);
  eig::LanczosOptions opts;
  opts.count = 4;
  opts.tol = 1e-9;
  auto pairs = eig::smallest_eigenpairs(K, M, opts);
  for (const auto& p : pairs) CHECK(p.residual <= 1e-9);
}

TEST_CASE("cell Laplacian with mean deflation approaches pi^2") {
  auto g = make_geometry(nullptr);
  auto coeffs = make_coefficients("1", "0", "1", "1");
  double values[2];
  int level = 0;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    mesh::TriMesh m = mesh::mesh_cell(g, 0.0, h);
    fem::DofMap dofs = fem::periodicify(m);
    fem::SparseMatrix K = fem::assemble_stiffness(m, coeffs, 0.0, dofs);
    fem::SparseMatrix M = fem::assemble_mass(m, fem::unit_weight(), dofs);
    std::vector<double> ones(static_cast<std::size_t>(K.n), 1.0);
    eig::LanczosOptions opts;
    opts.count = 1;
    opts.shift = -1.0;
    opts.deflate = &ones;
    auto pairs = eig::smallest_eigenpairs(K, M, opts);
    values[level++] = pairs[0].value;
  }
  double extrapolated = (4.0 * values[1] - values[0]) / 3.0;
  CHECK(std::abs(values[1] - kPi * kPi) <= std::abs(values[0] - kPi * kPi));
  CHECK(std::abs(extrapolated - kPi * kPi) <= 5e-3 * kPi * kPi);
}

TEST_CASE("shift invariance below the spectrum") {
  const int n = 120;
  fem::SparseMatrix K = dirichlet_laplacian_1d(n, 1.0 / (n + 1));
  fem::SparseMatrix M = eig::identity_matrix(n);
  eig::LanczosOptions a, b;
  a.count = b.count = 3;
  a.shift = 0.0;
  b.shift = 5.0;
  auto pa = eig::smallest_eigenpairs(K, M, a);
  auto pb = eig::smallest_eigenpairs(K, M, b);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(pa[static_cast<std::size_t>(j)].value -
                   pb[static_cast<std::size_t>(j)].value) <=
          1e-8 * pa[static_cast<std::size_t>(j)].value);
}

TEST_CASE("returned batch is M-orthonormal") {
  auto g = make_geometry(testing::kDiskHole);
  auto coeffs = make_coefficients("1", "0", "1", "1");
  mesh::TriMesh m = mesh::mesh_cell(g, 0.0, 1.0 / 8);
  fem::DofMap dofs = fem::build_dofs(m, {mesh::Tag::kLateral}, false);
  fem::SparseMatrix K = fem::assemble_stiffness(m, coeffs, 0.0, dofs);
  fem::SparseMatrix M = fem::assemble_mass(m, fem::unit_weight(), dofs);
  eig::LanczosOptions opts;
  opts.count = 4;
  auto pairs = eig::smallest_eigenpairs(K, M, opts);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::vector<double> Mi = M.multiply(pairs[i].vector);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      double dot = 0.0;
      for (int k = 0; k < M.n; ++k)
        dot += Mi[static_cast<std::size_t>(k)] * pairs[j].vector[static_cast<std::size_t>(k)];
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
    }
  }
}

TEST_CASE("agrees with a dense generalized eigensolver") {
  const int n = 40;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd R(n, n), S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      R(i, j) = gauss(rng);
      S(i, j) = gauss(rng);
    }
  Eigen::MatrixXd Kd = R.transpose() * R + Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Md = 0.1 * S.transpose() * S + Eigen::MatrixXd::Identity(n, n);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(Kd, Md);
  REQUIRE(dense.info() == Eigen::Success);

  eig::LanczosOptions opts;
  opts.count = 5;
  opts.tol = 1e-10;
  auto pairs = eig::smallest_eigenpairs(dense_to_sparse(Kd), dense_to_sparse(Md), opts);
  for (int j = 0; j < 5; ++j)
    CHECK(std::abs(pairs[static_cast<std::size_t>(j)].value - dense.eigenvalues()(j)) <=
          1e-8 * std::abs(dense.eigenvalues()(j)));
}

TEST_CASE("multiple eigenvalues are found across restarts and flagged") {
  fem::SparseMatrix K = diag_matrix({1.0, 1.0, 2.0, 3.0});
  fem::SparseMatrix M = eig::identity_matrix(4);
  eig::LanczosOptions opts;
  opts.count = 2;
  auto pairs = eig::smallest_eigenpairs(K, M, opts);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pairs[1].value == doctest::Approx(1.0).epsilon(1e-10));
  auto flags = eig::numerically_multiple(pairs);
  CHECK(flags[0]);
  CHECK(flags[1]);
}

TEST_CASE("non-convergence carries the best residual") {
  const int n = 400;
  fem::SparseMatrix K = dirichlet_laplacian_1d(n, 1.0 / (n + 1));
  fem::SparseMatrix M = eig::identity_matrix(n);
  eig::LanczosOptions opts;
  opts.count = 6;
  opts.tol = 1e-16;  // unreachable
  opts.max_steps = 4;
  opts.restarts = 0;
  CHECK_THROWS_AS(eig::smallest_eigenpairs(K, M, opts), NumericalError);
}
