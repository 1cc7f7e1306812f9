#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elmech/lumped.hpp"

using namespace elmech;

namespace {

constexpr double kFoldTol = 1e-9;     // closed form vs brute-force fold
constexpr double kRatioTol = 1e-3;    // closed form vs ODE bisection
constexpr double kEnergyTol = 1e-6;   // RK4 energy error per period, bounded orbit

}  // namespace

TEST_CASE("closed-form static fold") {
  const LumpedPlate p;
  const auto f = lumped_static_pullin(p);
  CHECK(f.V_pi == doctest::Approx(1.8294).epsilon(1e-4));
  CHECK(f.x_pi == doctest::Approx(3.333e-7).epsilon(1e-3));
  CHECK(f.x_pi / p.g == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  LumpedPlate wide = p;
  wide.g = 8 * p.g;
  CHECK(lumped_static_pullin(wide).V_pi / f.V_pi == doctest::Approx(std::sqrt(512.0)).epsilon(1e-14));
  CHECK(lumped_static_pullin(wide).x_pi / wide.g == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("brute-force fold agrees with the closed form") {
  for (double k : {0.5, 1.0, 7.0}) {
    LumpedPlate p;
    p.k = k;
    p.g = 2e-6 / k;
    const auto exact = lumped_static_pullin(p);
    const auto search = lumped_static_pullin_search(p);
    CHECK(std::abs(search.V_pi - exact.V_pi) <= kFoldTol * exact.V_pi);
    CHECK(std::abs(search.x_pi - exact.x_pi) <= kFoldTol * exact.x_pi);
  }
}

TEST_CASE("closed-form dynamic pull-in") {
  const LumpedPlate p;
  CHECK(lumped_dynamic_pullin(p) == doctest::Approx(1.6804).epsilon(1e-4));
  for (double g : {1e-7, 1e-6, 3e-5}) {
    LumpedPlate q = p;
    q.g = g;
    const double ratio = lumped_dynamic_pullin(q) / lumped_static_pullin(q).V_pi;
    CHECK(std::abs(ratio - std::sqrt(27.0 / 32.0)) < 1e-9);
    CHECK(ratio < 1.0);
  }
}

TEST_CASE("invalid parameters are rejected") {
  LumpedPlate p;
  p.k = 0;
  CHECK_THROWS_AS(lumped_static_pullin(p), std::invalid_argument);
  p = LumpedPlate{};
  p.g = -1e-6;
  CHECK_THROWS_AS(lumped_dynamic_pullin(p), std::invalid_argument);
  CHECK_THROWS_AS(lumped_static_displacement(LumpedPlate{}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(lumped_integrate(LumpedPlate{}, 1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("static displacement solves the force balance") {
  const LumpedPlate p;
  for (double f : {0.1, 0.5, 0.9, 0.999}) {
    const double V = f * lumped_static_pullin(p).V_pi;
    const double x = lumped_static_displacement(p, V);
    CHECK(x > 0);
    CHECK(x < p.g / 3);
    CHECK(p.k * x == doctest::Approx(p.force(x, V)).epsilon(1e-10));
  }
}

TEST_CASE("zero voltage from rest stays at rest") {
  const LumpedPlate p;
  const auto tr = lumped_integrate(p, 0.0, p.period() / 500, 3 * p.period());
  CHECK(tr.kind == TrajectoryClass::Bounded);
  CHECK(tr.max_x == 0.0);
}

TEST_CASE("step response overshoots the static equilibrium") {
  const LumpedPlate p;
  const double V_pi = lumped_static_pullin(p).V_pi;
  const auto half = lumped_integrate(p, 0.5 * V_pi, p.period() / 1000, 3 * p.period());
  CHECK(half.kind == TrajectoryClass::Bounded);
  CHECK(half.max_x > lumped_static_displacement(p, 0.5 * V_pi));
  // Linear limit: the peak is twice the static deflection.
  const double V = 0.02 * V_pi;
  const auto small = lumped_integrate(p, V, p.period() / 1000, 1.2 * p.period());
  CHECK(small.max_x / lumped_static_displacement(p, V) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("RK4 conserves energy on bounded orbits") {
  const LumpedPlate p;
  const double V = 0.9 * lumped_dynamic_pullin(p);
  const int periods = 5;
  const auto tr = lumped_integrate(p, V, p.period() / 1000, periods * p.period());
  REQUIRE(tr.kind == TrajectoryClass::Bounded);
  CHECK(tr.max_energy_error < kEnergyTol * periods);
}

TEST_CASE("step above dynamic pull-in reaches contact") {
  const LumpedPlate p;
  const auto tr = lumped_integrate(p, 1.01 * lumped_dynamic_pullin(p), p.period() / 1000, 10 * p.period());
  CHECK(tr.kind == TrajectoryClass::PullIn);
  CHECK(tr.contact_time > 0);
  CHECK(tr.x.back() == doctest::Approx(0.95 * p.g));
}

TEST_CASE("ODE bisection reproduces the closed-form dynamic pull-in") {
  const LumpedPlate p;
  const auto b = lumped_dynamic_pullin_ode(p);
  CHECK(b.V_stable < b.V_unstable);
  CHECK(std::abs(b.V_dpi / lumped_dynamic_pullin(p) - 1.0) < kRatioTol);
}
