#include "elmech/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "elmech/errors.hpp"

namespace elmech {

using SpMat = Eigen::SparseMatrix<double>;

namespace {

constexpr double kResidualFactor = 1e-10;
constexpr double kPivotFloor = 1e-14;

double max_abs_column_sum(const SpMat& K) {
  double best = 0.0;
  for (int k = 0; k < K.outerSize(); ++k) {
    double s = 0.0;
    for (SpMat::InnerIterator it(K, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

// A few steps of shifted inverse iteration from a fixed start vector.
Eigen::VectorXd null_direction(const SpMat& A) {
  const int n = int(A.rows());
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, 1.0, 2.0);
  if (n == 0) return v;
  SpMat I(n, n);
  I.setIdentity();
  const double shift = 1e-10 * std::max(max_abs_column_sum(A), 1e-300);
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A + shift * I);
  if (lu.info() != Eigen::Success) return v.normalized();
  for (int it = 0; it < 4; ++it) {
    v = lu.solve(v);
    const double nv = v.norm();
    if (!(nv > 0) || !std::isfinite(nv)) break;
    v /= nv;
  }
  return v;
}

}  // namespace

struct SymmetricSolver::Impl {
  Eigen::VectorXd scale;  // D
  SpMat scaled;           // D K D
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  bool ldlt_ok = false;
  bool lu_ready = false;
  bool lu_ok = false;
  bool analyzed = false;

  void ensure_lu() {
    if (lu_ready) return;
    lu_ready = true;
    lu.analyzePattern(scaled);
    lu.factorize(scaled);
    lu_ok = lu.info() == Eigen::Success;
  }
};

namespace {

bool same_pattern(const SpMat& a, const SpMat& b) {
  if (a.rows() != b.rows() || a.nonZeros() != b.nonZeros() || !a.isCompressed() || !b.isCompressed()) return false;
  return std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

}  // namespace

void SymmetricSolver::factorize(const SpMat& K) {
  if (K.rows() != K.cols()) throw std::invalid_argument("linear_solve: matrix must be square");
  SpMat Kc = K;
  Kc.makeCompressed();
  // The symbolic analysis is kept when the pattern repeats (Newton and time stepping).
  const bool reuse = impl_ && impl_.use_count() == 1 && impl_->analyzed && same_pattern(Kc, K_);
  K_ = std::move(Kc);
  if (!reuse) impl_ = std::make_shared<Impl>();
  impl_->lu_ready = impl_->lu_ok = false;
  const int n = int(K_.rows());
  norm_ = max_abs_column_sum(K_);

  impl_->scale = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd diag = K_.diagonal();
  for (int i = 0; i < n; ++i)
    if (std::abs(diag(i)) > 0) impl_->scale(i) = 1.0 / std::sqrt(std::abs(diag(i)));
  impl_->scaled = impl_->scale.asDiagonal() * K_ * impl_->scale.asDiagonal();
  impl_->scaled.makeCompressed();

  if (!reuse) {
    impl_->ldlt.analyzePattern(impl_->scaled);
    impl_->analyzed = true;
  }
  impl_->ldlt.factorize(impl_->scaled);
  negative_ = 0;
  pivot_ratio_ = 0.0;
  impl_->ldlt_ok = impl_->ldlt.info() == Eigen::Success;
  if (impl_->ldlt_ok && n > 0) {
    const Eigen::VectorXd d = impl_->ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.cwiseAbs().minCoeff();
    pivot_ratio_ = dmax > 0 ? dmin / dmax : 0.0;
    for (int i = 0; i < n; ++i) negative_ += d(i) < 0;
    if (!(pivot_ratio_ > kPivotFloor) || !d.allFinite()) impl_->ldlt_ok = false;
  }
  if (!impl_->ldlt_ok) {
    impl_->ensure_lu();
    if (!impl_->lu_ok)
      throw SingularMatrixError("tangent matrix is singular", (impl_->scale.asDiagonal() * null_direction(impl_->scaled)).normalized());
  }
}

LinearSolveReport SymmetricSolver::solve(const Eigen::VectorXd& b) const {
  if (!impl_) throw std::logic_error("SymmetricSolver::solve before factorize");
  LinearSolveReport rep;
  rep.negative_pivots = negative_;
  const Eigen::VectorXd& D = impl_->scale;
  const Eigen::VectorXd bs = D.cwiseProduct(b);

  auto solve_scaled = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
    if (impl_->ldlt_ok && !rep.fallback) return impl_->ldlt.solve(rhs);
    return impl_->lu.solve(rhs);
  };
  auto measure = [&](const Eigen::VectorXd& x) {
    rep.residual = (K_ * x - b).norm();
    rep.bound = kResidualFactor * (norm_ * x.norm() + b.norm());
    return rep.residual <= rep.bound && x.allFinite();
  };

  if (!impl_->ldlt_ok) rep.fallback = true;
  Eigen::VectorXd y = solve_scaled(bs);
  rep.x = D.cwiseProduct(y);
  for (int pass = 0; pass < 3 && !measure(rep.x); ++pass) {
    y += solve_scaled(D.cwiseProduct(b - K_ * rep.x));
    rep.x = D.cwiseProduct(y);
  }
  if (measure(rep.x)) return rep;

  if (!rep.fallback) {
    impl_->ensure_lu();
    if (impl_->lu_ok) {
      rep.fallback = true;
      y = impl_->lu.solve(bs);
      rep.x = D.cwiseProduct(y);
      for (int pass = 0; pass < 3 && !measure(rep.x); ++pass) {
        y += impl_->lu.solve(D.cwiseProduct(b - K_ * rep.x));
        rep.x = D.cwiseProduct(y);
      }
      if (measure(rep.x)) return rep;
    }
  }
  if (!rep.x.allFinite())
    throw SingularMatrixError("tangent matrix is numerically singular", (D.asDiagonal() * null_direction(impl_->scaled)).normalized());
  return rep;
}

LinearSolveReport linear_solve(const SpMat& K, const Eigen::VectorXd& b) {
  return SymmetricSolver(K).solve(b);
}

void write_triplets(std::ostream& os, const SpMat& K) {
  char buf[96];
  for (int k = 0; k < K.outerSize(); ++k)
    for (SpMat::InnerIterator it(K, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", int(it.row()), int(it.col()), it.value());
      os << buf;
    }
}

}  // namespace elmech
