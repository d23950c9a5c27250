#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rodspec/fem.hpp"

namespace rodspec::eig {

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;  // M-normalized (x' M x = 1)
  double residual = 0.0;       // ||Kx - value Mx|| / (||Kx|| + |value| ||Mx||)
};

// Sparse LDLT of a (shifted) symmetric matrix. Solves include one step of
// iterative refinement to meet the 1e-10 relative residual contract.
class LdltFactor {
 public:
  explicit LdltFactor(const fem::SparseMatrix& A);
  ~LdltFactor();
  LdltFactor(LdltFactor&&) noexcept;
  LdltFactor& operator=(LdltFactor&&) noexcept;

  bool usable() const;        // factorization succeeded with healthy pivots
  int negative_pivots() const;  // inertia: eigenvalue count below the shift

  std::vector<double> solve(const std::vector<double>& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LdltFactor ldlt_factor(const fem::SparseMatrix& A);

struct LanczosOptions {
  int count = 1;
  double tol = 1e-9;
  double shift = 0.0;
  std::uint64_t seed = 42;
  int max_steps = 500;
  int restarts = 3;
  // Optional vector to deflate (e.g. the constant kernel of a pure-Neumann
  // periodic cell operator).
  const std::vector<double>* deflate = nullptr;
};

// The j smallest eigenpairs of K x = lambda M x (K symmetric PSD after
// elimination, M SPD) by shift-invert Lanczos with full M-reorthogonalization.
// The shift is moved below lambda_1 automatically (LDLT inertia check) and
// retried on pivot failure. Deterministic for a fixed seed.
std::vector<EigenPair> smallest_eigenpairs(const fem::SparseMatrix& K,
                                           const fem::SparseMatrix& M,
                                           const LanczosOptions& options);

// Flags pairs whose gap to the previous value is below 1e-12 * scale.
std::vector<bool> numerically_multiple(const std::vector<EigenPair>& pairs);

// Identity mass matrix (for finite-difference eigenproblems).
fem::SparseMatrix identity_matrix(int n);

}  // namespace rodspec::eig
