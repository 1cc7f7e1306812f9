#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "elmech/dynamics.hpp"
#include "elmech/errors.hpp"
#include "elmech/linear_solver.hpp"

namespace elmech {

ModalResult modal_analysis(const CoupledModel& model, const State& equilibrium, int n_modes) {
  const int n = model.num_free();
  const Eigen::VectorXd mdiag = model.mass().diagonal();
  std::vector<int> s_rows, m_rows, map(n, -1);
  for (int i = 0; i < n; ++i) {
    auto& rows = mdiag(i) > 0 ? s_rows : m_rows;
    map[i] = int(rows.size());
    rows.push_back(i);
  }
  const int ns = int(s_rows.size()), nm = int(m_rows.size());
  if (ns == 0) throw ValidationError("modal analysis needs a structure with mass");

  const SparseMatrix K = model.assemble(equilibrium).K;
  const SparseMatrix& M = model.mass();
  Eigen::MatrixXd Kss = Eigen::MatrixXd::Zero(ns, ns), Mss = Eigen::MatrixXd::Zero(ns, ns);
  Eigen::MatrixXd Kms = Eigen::MatrixXd::Zero(nm, ns);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < n; ++k)
    for (SparseMatrix::InnerIterator it(K, k); it; ++it) {
      const int r = int(it.row());
      const bool rs = mdiag(r) > 0, cs = mdiag(k) > 0;
      if (rs && cs) Kss(map[r], map[k]) = it.value();
      else if (!rs && cs) Kms(map[r], map[k]) = it.value();
      else if (!rs && !cs) trip.emplace_back(map[r], map[k], it.value());
    }
  for (int k = 0; k < n; ++k)
    for (SparseMatrix::InnerIterator it(M, k); it; ++it)
      if (mdiag(it.row()) > 0 && mdiag(k) > 0) Mss(map[it.row()], map[k]) = it.value();

  // Static condensation of the massless unknowns.
  Eigen::MatrixXd X(nm, ns);
  if (nm > 0) {
    SparseMatrix Kmm(nm, nm);
    Kmm.setFromTriplets(trip.begin(), trip.end());
    SymmetricSolver solver(Kmm);
    for (int j = 0; j < ns; ++j) X.col(j) = solver.solve(Kms.col(j)).x;
    Kss.noalias() -= Kms.transpose() * X;
  }
  Kss = 0.5 * (Kss + Kss.transpose()).eval();

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Kss, Mss);
  if (eig.info() != Eigen::Success) throw ValidationError("modal eigensolver failed");
  const int count = std::min(n_modes, ns);
  ModalResult res;
  res.eigenvalues = eig.eigenvalues().head(count);
  res.frequencies_hz.resize(count);
  res.unstable.resize(count);
  res.shapes.resize(n, count);
  for (int k = 0; k < count; ++k) {
    const double lambda = res.eigenvalues(k);
    res.unstable[k] = lambda < 0;
    res.frequencies_hz(k) = lambda > 0 ? std::sqrt(lambda) / (2 * std::numbers::pi) : 0.0;
    const Eigen::VectorXd xs = eig.eigenvectors().col(k);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < ns; ++j) full(s_rows[j]) = xs(j);
    if (nm > 0) {
      const Eigen::VectorXd xm = -X * xs;
      for (int j = 0; j < nm; ++j) full(m_rows[j]) = xm(j);
    }
    res.shapes.col(k) = full;
  }
  return res;
}

double fundamental_period(const CoupledModel& model, const State& state) {
  const auto modes = modal_analysis(model, state, 1);
  if (modes.unstable[0] || !(modes.frequencies_hz(0) > 0))
    throw ValidationError("no stable fundamental mode at this state");
  return 1.0 / modes.frequencies_hz(0);
}

}  // namespace elmech
