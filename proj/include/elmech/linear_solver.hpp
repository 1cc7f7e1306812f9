#pragma once

#include <iosfwd>
#include <memory>

#include <Eigen/Sparse>

namespace elmech {

struct LinearSolveReport {
  Eigen::VectorXd x;
  int negative_pivots = 0;   // inertia of K (number of negative eigenvalues)
  double residual = 0.0;     // |K x - b|
  double bound = 0.0;        // 1e-10 (|K| |x| + |b|)
  bool fallback = false;     // pivoted LU was needed
};

/// Sparse symmetric (possibly indefinite) factorization. The matrix is
/// diagonally equilibrated, D K D, before an LDL^T factorization with AMD
/// ordering; the inertia is read off the pivots. Near-zero pivots, or a
/// solution that misses the residual bound after refinement, switch to a
/// pivoted sparse LU. An exactly singular matrix raises SingularMatrixError
/// carrying an inverse-iteration estimate of the null direction.
class SymmetricSolver {
 public:
  SymmetricSolver() = default;
  explicit SymmetricSolver(const Eigen::SparseMatrix<double>& K) { factorize(K); }

  void factorize(const Eigen::SparseMatrix<double>& K);
  LinearSolveReport solve(const Eigen::VectorXd& b) const;
  int negative_pivots() const { return negative_; }
  /// Smallest |pivot| relative to the largest one, on the equilibrated matrix.
  double pivot_ratio() const { return pivot_ratio_; }
  int rows() const { return int(K_.rows()); }

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  Eigen::SparseMatrix<double> K_;
  int negative_ = 0;
  double pivot_ratio_ = 0.0;
  double norm_ = 0.0;
};

LinearSolveReport linear_solve(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& b);

/// Debug dump: one "row col value" line per stored entry, %.17g.
void write_triplets(std::ostream& os, const Eigen::SparseMatrix<double>& K);

}  // namespace elmech
