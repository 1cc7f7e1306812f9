#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fd_checks.hpp"

using namespace elmech;

namespace {

constexpr double kForceTol = 1e-6;
constexpr double kTangentTol = 1e-5;
constexpr double kSymTol = 1e-12;
constexpr int kConfigurations = 24;

}  // namespace

TEST_CASE("randomized configurations: derivatives match finite differences") {
  for (int s = 0; s < kConfigurations; ++s) {
    const auto e = test::random_configuration_check(1000 + s);
    CAPTURE(e.label);
    CHECK(e.element_force < kForceTol);
    CHECK(e.element_tangent < kTangentTol);
    CHECK(e.global_force < kForceTol);
    CHECK(e.global_tangent < kTangentTol);
    CHECK(e.symmetry <= kSymTol);
  }
}

TEST_CASE("randomized states: reversing all potentials flips the charge rows only") {
  test::Gen gen(77);
  for (int s = 0; s < 6; ++s) {
    const auto cfg = test::small_beam({"geometry.order=" + std::to_string(gen.integer(1, 2))});
    const CoupledModel model = build_model(cfg);
    const double V = gen.uniform(5, 100);
    Eigen::VectorXd z(model.num_free());
    for (int i = 0; i < model.num_free(); ++i)
      z(i) = model.dofs().kind(i) == SlotKind::Potential ? gen.uniform(0, V) : gen.uniform(-1e-8, 1e-8);
    Eigen::VectorXd zn = z;
    for (int i = 0; i < model.num_free(); ++i)
      if (model.dofs().kind(i) == SlotKind::Potential) zn(i) = -z(i);
    const auto a = model.assemble(model.state(z, V)), b = model.assemble(model.state(zn, -V));
    // Mechanical rows are even in phi, charge rows odd.
    for (int i = 0; i < model.num_free(); ++i) {
      const bool pot = model.dofs().kind(i) == SlotKind::Potential;
      CHECK(std::abs(a.r(i) - (pot ? -b.r(i) : b.r(i))) <= 1e-12 * (pot ? a.charge_scale : a.force_scale));
    }
  }
}
