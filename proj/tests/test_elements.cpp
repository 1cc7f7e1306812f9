#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "elmech/electrostatic.hpp"
#include "elmech/mechanical.hpp"
#include "support.hpp"

using namespace elmech;

namespace {

constexpr double kExact = 1e-13;    // identities that hold up to round-off
constexpr double kGradTol = 1e-6;   // first derivatives against central differences
constexpr double kHessTol = 1e-5;   // second derivatives against central differences
constexpr double kEps0 = kVacuumPermittivity;

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

NodeCoords<double> reference_triangle(ElementKind kind, double h) {
  NodeCoords<double> X(2, node_count(kind));
  for (int a = 0; a < node_count(kind); ++a) X.col(a) = h * reference_node(kind, a);
  return X;
}

ElementVector<double> flat(const NodeCoords<double>& U) {
  return Eigen::Map<const ElementVector<double>>(U.data(), U.size());
}

NodeCoords<double> shifted(const NodeCoords<double>& x, int k, double h) {
  NodeCoords<double> y = x;
  y(k % 2, k / 2) += h;
  return y;
}

}  // namespace

TEST_CASE("shape functions interpolate and form a partition of unity") {
  const auto c = shape_eval<double>(ElementKind::Tri3, Eigen::Vector2d(1.0 / 3, 1.0 / 3));
  CHECK((c.N - Eigen::Vector3d::Constant(1.0 / 3)).norm() < kExact);
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6})
    for (int a = 0; a < node_count(kind); ++a) {
      const auto s = shape_eval<double>(kind, reference_node(kind, a));
      for (int b = 0; b < node_count(kind); ++b) CHECK(s.N(b) == doctest::Approx(a == b ? 1.0 : 0.0));
    }
  test::Gen gen(11);
  for (int i = 0; i < 20; ++i) {
    double x = gen.uniform(0, 1), y = gen.uniform(0, 1);
    if (x + y > 1) x = 1 - x, y = 1 - y;
    for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
      const auto s = shape_eval<double>(kind, Eigen::Vector2d(x, y));
      CHECK(std::abs(s.N.sum() - 1.0) < kExact);
      CHECK(s.dN.colwise().sum().norm() < kExact);
    }
  }
}

TEST_CASE("quadrature rules integrate monomials exactly") {
  CHECK(quadrature_rule(ElementKind::Tri3, 1).size() == 1);
  CHECK(quadrature_rule(ElementKind::Tri3, 1).weights[0] == doctest::Approx(0.5));
  CHECK(quadrature_rule(ElementKind::Tri3, 2).size() == 3);
  for (int degree = 1; degree <= 5; ++degree) {
    const auto& rule = quadrature_rule(ElementKind::Tri6, degree);
    CHECK(rule.degree >= degree);
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b) {
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          sum += rule.weights[q] * std::pow(rule.points[q].x(), a) * std::pow(rule.points[q].y(), b);
        // int_T x^a y^b = a! b! / (a + b + 2)!
        CHECK(std::abs(sum - factorial(a) * factorial(b) / factorial(a + b + 2)) < kExact);
      }
  }
  CHECK_THROWS_AS(quadrature_rule(ElementKind::Tri3, 6), std::invalid_argument);
  CHECK_THROWS_AS(quadrature_rule(ElementKind::Tri3, -1), std::invalid_argument);
}

TEST_CASE("mechanical element at rest and under rigid translation") {
  MechanicalMaterial mat;
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = reference_triangle(kind, 2e-6);
    const int n = 2 * node_count(kind);
    const auto rest = mech_element<double>(kind, X, mat, ElementVector<double>::Zero(n));
    CHECK(rest.energy == 0.0);
    CHECK(rest.f.norm() == 0.0);
    const Eigen::MatrixXd K0 = unit_linear_stiffness(kind, X) * mat.E;
    CHECK((rest.K - K0).norm() <= kExact * K0.norm());
    ElementVector<double> t(n);
    for (int a = 0; a < n / 2; ++a) t.segment<2>(2 * a) << 3e-7, -1e-7;
    const auto moved = mech_element<double>(kind, X, mat, t);
    CHECK(moved.energy == doctest::Approx(0.0));
    CHECK(moved.f.norm() <= kExact * rest.K.norm() * 3e-7);
  }
}

TEST_CASE("uniaxial stretch matches the hand-evaluated St. Venant-Kirchhoff energy") {
  MechanicalMaterial mat;
  const double h = 1e-5, lambda = 1.02;
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = reference_triangle(kind, h);
    NodeCoords<double> U = NodeCoords<double>::Zero(2, node_count(kind));
    U.row(0) = (lambda - 1) * X.row(0);
    const auto out = mech_element<double>(kind, X, mat, flat(U));
    // Plane strain: W = 1/2 (lambda_L + 2 mu) E11^2 * area, E11 = (l^2 - 1) / 2.
    const double E11 = 0.5 * (lambda * lambda - 1);
    const double lame = mat.E * mat.nu / ((1 + mat.nu) * (1 - 2 * mat.nu)), mu = mat.E / (2 * (1 + mat.nu));
    const double expected = 0.5 * (lame + 2 * mu) * E11 * E11 * 0.5 * h * h;
    CHECK(out.energy == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("mechanical forces and tangent match finite differences") {
  MechanicalMaterial mat;
  test::Gen gen(5);
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const double h = 1e-6;
    const auto X = gen.triangle(kind, h);
    const int n = 2 * node_count(kind);
    const ElementVector<double> u = gen.vector(n, 0.05 * h);
    const auto out = mech_element<double>(kind, X, mat, u);
    const double du = 1e-6 * h;
    Eigen::VectorXd f_fd(n);
    Eigen::MatrixXd K_fd(n, n);
    for (int k = 0; k < n; ++k) {
      ElementVector<double> up = u, um = u;
      up(k) += du;
      um(k) -= du;
      const auto p = mech_element<double>(kind, X, mat, up), m = mech_element<double>(kind, X, mat, um);
      f_fd(k) = (p.energy - m.energy) / (2 * du);
      K_fd.col(k) = (p.f - m.f) / (2 * du);
    }
    CHECK(test::rel_err(out.f, f_fd, out.f.cwiseAbs().maxCoeff()) < kGradTol);
    CHECK(test::rel_err(out.K, K_fd, out.K.cwiseAbs().maxCoeff()) < kHessTol);
    CHECK((out.K - out.K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * out.K.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("folded element raises ElementInversion") {
  MechanicalMaterial mat;
  const auto X = reference_triangle(ElementKind::Tri3, 1e-6);
  NodeCoords<double> U = NodeCoords<double>::Zero(2, 3);
  U(1, 2) = -2e-6;  // vertex 2 pushed through the opposite edge
  CHECK_THROWS_AS(mech_element<double>(ElementKind::Tri3, X, mat, flat(U)), ElementInversion);
  NodeCoords<double> bad = X;
  std::swap(bad(0, 1), bad(0, 2));
  std::swap(bad(1, 1), bad(1, 2));
  CHECK_THROWS_AS(elec_element<double>(ElementKind::Tri3, bad, kEps0, Eigen::Vector3d::Zero()), ElementInversion);
}

TEST_CASE("consistent mass integrates the density") {
  MechanicalMaterial mat;
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = reference_triangle(kind, 3e-6);
    const int n = 2 * node_count(kind);
    const auto out = mech_element<double>(kind, X, mat, ElementVector<double>::Zero(n), true);
    Eigen::VectorXd ex = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < n / 2; ++a) ex(2 * a) = 1;
    CHECK(ex.dot(out.M * ex) == doctest::Approx(mat.rho * 0.5 * 9e-12).epsilon(1e-12));
    CHECK((out.M - out.M.transpose()).norm() <= kExact * out.M.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.M);
    CHECK(es.eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("constant potential carries no field") {
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = reference_triangle(kind, 1e-6);
    const ShapeVector<double> phi = ShapeVector<double>::Constant(node_count(kind), 42.0);
    const auto e = electrostatic_element<double>(kind, X, kEps0, phi);
    const double scale = kEps0 * 42.0 * 42.0;
    CHECK(std::abs(e.energy) < kExact * scale);
    CHECK(e.charges.cwiseAbs().maxCoeff() < kExact * e.K_pp.cwiseAbs().maxCoeff() * 42.0);
    CHECK(e.force.cwiseAbs().maxCoeff() < kExact * scale / 1e-6);
  }
}

TEST_CASE("K_phiphi is symmetric positive semi-definite with the constants as null space") {
  test::Gen gen(17);
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = gen.triangle(kind, 1e-6);
    const int n = node_count(kind);
    const ShapeVector<double> phi = gen.vector(n, 50.0);
    const auto e = elec_element<double>(kind, X, kEps0, phi);
    CHECK(std::abs(e.energy - 0.5 * phi.dot(e.K_pp * phi)) <= kExact * e.energy);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e.K_pp);
    const double top = es.eigenvalues().maxCoeff();
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-12 * top);
    CHECK(es.eigenvalues()(1) > 1e-6 * top);
    CHECK((e.K_pp * Eigen::VectorXd::Ones(n)).norm() < 1e-12 * top);
  }
}

TEST_CASE("field energy of a uniform gap matches the parallel-plate density") {
  // Square [0, w] x [0, g] split into two TRI3, phi = V y / g.
  const double w = 2e-6, g = 2e-6, V = 10.0;
  NodeCoords<double> A(2, 3), B(2, 3);
  A << 0, w, w, 0, 0, g;
  B << 0, w, 0, 0, g, g;
  const Eigen::Vector3d pa(0, 0, V), pb(0, V, V);
  const double W = elec_element<double>(ElementKind::Tri3, A, kEps0, pa).energy +
                   elec_element<double>(ElementKind::Tri3, B, kEps0, pb).energy;
  CHECK(W / w == doctest::Approx(0.5 * kEps0 * V * V / g).epsilon(1e-13));
}

TEST_CASE("electrostatic outputs scale quadratically with the potentials") {
  test::Gen gen(23);
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = gen.triangle(kind, 1e-6);
    const ShapeVector<double> phi = gen.vector(node_count(kind), 30.0);
    const auto e1 = electrostatic_element<double>(kind, X, kEps0, phi);
    const auto e2 = electrostatic_element<double>(kind, X, kEps0, ShapeVector<double>(2.0 * phi));
    CHECK((e2.force - 4.0 * e1.force).cwiseAbs().maxCoeff() <= kExact * e2.force.cwiseAbs().maxCoeff());
    CHECK(e2.energy == doctest::Approx(4.0 * e1.energy).epsilon(kExact));
  }
}

TEST_CASE("rigid translation of an electric element leaves the energy unchanged") {
  test::Gen gen(29);
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = gen.triangle(kind, 1e-6);
    const ShapeVector<double> phi = gen.vector(node_count(kind), 30.0);
    NodeCoords<double> Y = X;
    Y.colwise() += Eigen::Vector2d(0.25e-6, -0.5e-6);
    const double W0 = elec_element<double>(kind, X, kEps0, phi).energy;
    CHECK(elec_element<double>(kind, Y, kEps0, phi).energy == doctest::Approx(W0).epsilon(1e-12));
    // Forces on a free-floating element are self-equilibrated.
    const auto f = elec_force<double>(kind, X, kEps0, phi);
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    for (int a = 0; a < node_count(kind); ++a) total += f.segment<2>(2 * a);
    CHECK(total.norm() <= 1e-12 * f.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("zero potential gives vanishing coupling blocks") {
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const auto X = reference_triangle(kind, 1e-6);
    const auto t = coupled_tangent<double>(kind, X, kEps0, ShapeVector<double>::Zero(node_count(kind)));
    CHECK(t.K_uu_elec.norm() == 0.0);
    CHECK(t.K_uphi.norm() == 0.0);
  }
}

TEST_CASE("electrostatic derivatives match finite differences") {
  test::Gen gen(31);
  for (auto kind : {ElementKind::Tri3, ElementKind::Tri6}) {
    const double h = 1e-6;
    const auto x = gen.triangle(kind, h);
    const int n = node_count(kind);
    const ShapeVector<double> phi = gen.vector(n, 40.0);
    const auto e = electrostatic_element<double>(kind, x, kEps0, phi);
    const double dx = 1e-8 * h;
    Eigen::VectorXd f_fd(2 * n);
    Eigen::MatrixXd Kxx_fd(2 * n, 2 * n), Kxp_fd(2 * n, n);
    for (int k = 0; k < 2 * n; ++k) {
      const auto p = electrostatic_element<double>(kind, shifted(x, k, dx), kEps0, phi);
      const auto m = electrostatic_element<double>(kind, shifted(x, k, -dx), kEps0, phi);
      f_fd(k) = (p.energy - m.energy) / (2 * dx);
      Kxx_fd.col(k) = (p.force - m.force) / (2 * dx);
      Kxp_fd.row(k) = ((p.charges - m.charges) / (2 * dx)).transpose();
    }
    CHECK(test::rel_err(e.force, f_fd, e.force.cwiseAbs().maxCoeff()) < kGradTol);
    CHECK(test::rel_err(e.K_xx, Kxx_fd, e.K_xx.cwiseAbs().maxCoeff()) < kHessTol);
    CHECK(test::rel_err(e.K_xp, Kxp_fd, e.K_xp.cwiseAbs().maxCoeff()) < kHessTol);
    // Charges against the energy, linear in phi so a unit step is exact.
    Eigen::VectorXd q_fd(n);
    for (int a = 0; a < n; ++a) {
      ShapeVector<double> pp = phi, pm = phi;
      pp(a) += 1.0;
      pm(a) -= 1.0;
      q_fd(a) = (elec_element<double>(kind, x, kEps0, pp).energy - elec_element<double>(kind, x, kEps0, pm).energy) / 2;
    }
    CHECK(test::rel_err(e.charges, q_fd, e.charges.cwiseAbs().maxCoeff()) < kGradTol);
  }
}
