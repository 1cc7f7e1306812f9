#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "elmech/dynamics.hpp"
#include "elmech/lumped.hpp"
#include "support.hpp"

using namespace elmech;

namespace {

constexpr double kPeriodTol = 1e-3;   // spring-mass period at dt = T/200

struct Plate {
  RunConfig cfg = load_config("rigid_plate");
  CoupledModel model = build_model(cfg);
  Probe probe = build_probe(cfg, model.mesh());
  LumpedPlate lumped;
  Plate() {
    lumped.k = cfg.bcs.spring_stiffness;
    lumped.g = cfg.geometry.beam.gap;
    lumped.A = cfg.geometry.beam.length;
    const auto& g = cfg.geometry.beam;
    lumped.m = cfg.materials.mechanical.at("silicon").rho * g.length * g.thickness;
  }
  NewmarkSettings settings(int steps_per_period, double periods) const {
    NewmarkSettings s;
    s.dt = lumped.period() / steps_per_period;
    s.duration = periods * lumped.period();
    s.gap = cfg.geometry.beam.gap;
    return s;
  }
  Eigen::VectorXd uniform_velocity(double v) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(model.num_free());
    for (int i = 0; i < model.num_free(); ++i)
      if (model.dofs().kind(i) == SlotKind::Displacement && model.dofs().component_of(i) == 1) z(i) = -v;
    return z;
  }
};

const Plate& plate() {
  static const Plate p;
  return p;
}

// Upward zero crossings of d, linearly interpolated.
std::vector<double> crossings(const Trajectory& tr) {
  std::vector<double> out;
  for (std::size_t i = 1; i < tr.t.size(); ++i)
    if (tr.d[i - 1] < 0 && tr.d[i] >= 0)
      out.push_back(tr.t[i - 1] + (tr.t[i] - tr.t[i - 1]) * (-tr.d[i - 1]) / (tr.d[i] - tr.d[i - 1]));
  return out;
}

Trajectory synthetic(std::vector<double> t, std::vector<double> d) {
  Trajectory tr;
  tr.t = std::move(t);
  tr.d = std::move(d);
  tr.v.assign(tr.t.size(), 0.0);
  tr.energy.assign(tr.t.size(), EnergySample{});
  return tr;
}

}  // namespace

TEST_CASE("voltage schedules") {
  const auto step = VoltageSchedule::step(10.0);
  CHECK(step(0.0) == 10.0);
  CHECK(step(1e-3) == 10.0);
  VoltageSchedule delayed = step;
  delayed.step_time = 1e-6;
  CHECK(delayed(0.5e-6) == 0.0);
  CHECK(delayed(2e-6) == 10.0);
  VoltageSchedule ramp{ScheduleKind::Ramp, 10.0, 0.0, 1e6, {}};
  CHECK(ramp(5e-6) == doctest::Approx(5.0));
  CHECK(ramp(1.0) == 10.0);
  VoltageSchedule table{ScheduleKind::Table, 0.0, 0.0, 0.0, {{0.0, 0.0}, {1e-6, 4.0}, {2e-6, 2.0}}};
  CHECK(table(0.5e-6) == doctest::Approx(2.0));
  CHECK(table(1.5e-6) == doctest::Approx(3.0));
  CHECK(table(5e-6) == 2.0);
}

TEST_CASE("zero amplitude stays at rest") {
  const auto& p = plate();
  const auto tr = newmark_integrate(p.model, p.model.zero_state(0.0), {}, VoltageSchedule::step(0.0), p.probe,
                                    p.settings(50, 2.0));
  CHECK(!tr.truncated);
  CHECK(tr.max_displacement() == 0.0);
  for (const auto& e : tr.energy) CHECK(e.total() == 0.0);
  ClassifyRules rules{p.cfg.geometry.beam.gap, 0.95, 2.0 * p.lumped.period()};
  CHECK(classify_trajectory(tr, rules) == TrajectoryClass::Bounded);
}

TEST_CASE("spring-mass plate oscillates with the closed-form period") {
  const auto& p = plate();
  const auto tr = newmark_integrate(p.model, p.model.zero_state(0.0), p.uniform_velocity(1e-3),
                                    VoltageSchedule::step(0.0), p.probe, p.settings(200, 3.2));
  REQUIRE(!tr.truncated);
  const auto up = crossings(tr);
  REQUIRE(up.size() >= 2);
  const double T = (up.back() - up.front()) / double(up.size() - 1);
  CHECK(std::abs(T - p.lumped.period()) <= kPeriodTol * p.lumped.period());
  // Linear, undamped: the trapezoidal rule conserves energy to round-off.
  CHECK(tr.energy_drift() < 1e-9);
  CHECK(fundamental_period(p.model, p.model.zero_state(0.0)) == doctest::Approx(p.lumped.period()).epsilon(1e-6));
}

TEST_CASE("invalid Newmark settings are rejected") {
  const auto& p = plate();
  auto s = p.settings(100, 1.0);
  s.dt = 0.0;
  CHECK_THROWS_AS(newmark_integrate(p.model, p.model.zero_state(0.0), {}, VoltageSchedule::step(1.0), p.probe, s),
                  std::invalid_argument);
  s = p.settings(100, 1.0);
  s.beta = 0.1;
  CHECK_THROWS_AS(newmark_integrate(p.model, p.model.zero_state(0.0), {}, VoltageSchedule::step(1.0), p.probe, s),
                  std::invalid_argument);
  s = p.settings(100, 1.0);
  s.alpha = -0.5;
  CHECK_THROWS_AS(newmark_integrate(p.model, p.model.zero_state(0.0), {}, VoltageSchedule::step(1.0), p.probe, s),
                  std::invalid_argument);
}

TEST_CASE("classification rules") {
  ClassifyRules rules{1e-6, 0.95, 1e-3};
  CHECK(classify_trajectory(synthetic({0, 5e-4, 1e-3}, {0, 1e-7, 0}), rules) == TrajectoryClass::Bounded);
  CHECK(classify_trajectory(synthetic({0, 5e-4}, {0, 1e-7}), rules) == TrajectoryClass::Indeterminate);
  auto contact = synthetic({0, 5e-4}, {0, 0.95e-6});
  contact.contact = true;
  contact.contact_time = 5e-4;
  CHECK(classify_trajectory(contact, rules) == TrajectoryClass::PullIn);
  auto inverted = synthetic({0, 1e-4}, {0, 0.3e-6});
  inverted.inversion = true;
  CHECK(classify_trajectory(inverted, rules) == TrajectoryClass::PullIn);
  auto truncated = synthetic({0, 1e-4}, {0, 0.3e-6});
  truncated.truncated = true;
  CHECK(classify_trajectory(truncated, rules) == TrajectoryClass::Indeterminate);
  CHECK(to_string(TrajectoryClass::PullIn) == "PULL_IN");
  CHECK(to_string(TrajectoryClass::Bounded) == "BOUNDED");
  CHECK(to_string(TrajectoryClass::Indeterminate) == "INDETERMINATE");
}

TEST_CASE("step above static pull-in collapses with a recorded contact time") {
  const auto& p = plate();
  const double V = 1.05 * lumped_static_pullin(p.lumped).V_pi;
  const auto tr = newmark_integrate(p.model, p.model.zero_state(0.0), {}, VoltageSchedule::step(V), p.probe,
                                    p.settings(200, 3.0));
  CHECK(tr.contact);
  CHECK(tr.contact_time > 0.0);
  CHECK(tr.d.back() == doctest::Approx(0.95 * p.lumped.g).epsilon(1e-12));
  CHECK(tr.t.back() == tr.contact_time);
  ClassifyRules rules{p.lumped.g, 0.95, 3.0 * p.lumped.period()};
  CHECK(classify_trajectory(tr, rules) == TrajectoryClass::PullIn);
}

TEST_CASE("energy drift of a bounded step response falls at second order") {
  const auto& p = plate();
  const double V = 0.85 * lumped_static_pullin(p.lumped).V_pi;
  double drift[2];
  for (int k = 0; k < 2; ++k) {
    const auto tr = newmark_integrate(p.model, p.model.zero_state(0.0), {}, VoltageSchedule::step(V), p.probe,
                                      p.settings(50 << k, 3.0));
    REQUIRE(!tr.contact);
    drift[k] = tr.energy_drift();
  }
  CHECK(drift[1] < 0.01);
  // Ratio 4 for a second-order scheme; allow a margin for the nonlinearity.
  CHECK(drift[0] / drift[1] > 3.0);
}

TEST_CASE("dynamic pull-in of the rigid plate") {
  const auto& p = plate();
  const double V_pi = lumped_static_pullin(p.lumped).V_pi;
  DynamicSearchSettings s;
  s.newmark = p.settings(200, 10.0);
  s.rules = {p.lumped.g, 0.95, 10.0 * p.lumped.period()};
  s.tol_V = 0.5;
  const auto res = dynamic_pullin_search(p.model, p.model.zero_state(0.0), p.probe, 0.85 * V_pi, 0.97 * V_pi, s);
  REQUIRE(res.ok);
  CHECK(res.V_dpi < V_pi);
  CHECK(res.V_unstable - res.V_stable <= s.tol_V);
  CHECK(res.V_dpi / V_pi == doctest::Approx(std::sqrt(27.0 / 32.0)).epsilon(0.01));
  // The largest bounded run overshoots the static fold displacement g / 3.
  const auto it = std::find_if(res.trajectories.begin(), res.trajectories.end(),
                               [&](const Trajectory& t) { return t.voltage == res.V_stable; });
  REQUIRE(it != res.trajectories.end());
  CHECK(it->max_displacement() > p.lumped.g / 3.0);
  for (std::size_t i = 1; i < res.samples.size(); ++i) CHECK(res.samples[i].first > res.samples[i - 1].first);
}

TEST_CASE("search reports a bracket that does not straddle the threshold") {
  const auto& p = plate();
  const double V_pi = lumped_static_pullin(p.lumped).V_pi;
  DynamicSearchSettings s;
  s.newmark = p.settings(100, 2.0);
  s.rules = {p.lumped.g, 0.95, 2.0 * p.lumped.period()};
  const auto res = dynamic_pullin_search(p.model, p.model.zero_state(0.0), p.probe, 0.3 * V_pi, 0.5 * V_pi, s);
  CHECK(!res.ok);
  CHECK(!res.diagnostic.empty());
}

TEST_CASE("modes at zero voltage are the mechanical modes") {
  const auto cfg = test::small_beam({"geometry.nx=30"});
  const CoupledModel model = build_model(cfg);
  const auto modes = modal_analysis(model, model.zero_state(0.0), 4);
  // Independent route: dense generalized problem on the structural displacement unknowns.
  const auto sys = model.assemble(model.zero_state(0.0));
  std::vector<int> s;
  for (int i = 0; i < model.num_free(); ++i)
    if (model.dofs().kind(i) == SlotKind::Displacement) s.push_back(i);
  const Eigen::MatrixXd K(sys.K), M(model.mass());
  Eigen::MatrixXd Ks(s.size(), s.size()), Ms(s.size(), s.size());
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b) Ks(a, b) = K(s[a], s[b]), Ms(a, b) = M(s[a], s[b]);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ks, Ms, Eigen::EigenvaluesOnly);
  for (int k = 0; k < 4; ++k) CHECK(modes.eigenvalues(k) == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-9));

  // Clamped-clamped Euler-Bernoulli beam: f1 = 4.7300^2 / (2 pi L^2) sqrt(E' t^2 / (12 rho)).
  const auto& g = cfg.geometry.beam;
  const auto& mat = cfg.materials.mechanical.at("silicon");
  const double f1 = 4.730040745 * 4.730040745 / (2 * std::numbers::pi * g.length * g.length) *
                    std::sqrt(mat.bending_modulus() * g.thickness * g.thickness / (12 * mat.rho));
  CHECK(modes.frequencies_hz(0) == doctest::Approx(f1).epsilon(0.02));
  // Mass-normalized shapes.
  const Eigen::VectorXd x = modes.shapes.col(0);
  CHECK(x.dot(model.mass() * x) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("phase diagram export") {
  std::ostringstream empty;
  export_phase_diagram(empty, {}, "# config x\n");
  const std::string e = empty.str();
  CHECK(e.find("# config x") == 0);
  CHECK(e.find("# V [V], t [s], d_probe [m], v_probe [m/s]") != std::string::npos);
  CHECK(std::count(e.begin(), e.end(), '\n') == 2);

  auto bounded = synthetic({0, 1, 2}, {0, 1e-7, 0});
  bounded.voltage = 10;
  auto pulled = synthetic({0, 1, 1.5, 2}, {0, 1e-7, 5e-7, 9e-7});
  pulled.voltage = 20;
  pulled.contact = true;
  pulled.contact_time = 1.5;
  std::ostringstream os;
  export_phase_diagram(os, {bounded, pulled});
  std::istringstream is(os.str());
  std::vector<std::string> rows;
  int blanks = 0;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) ++blanks;
    else if (line[0] != '#') rows.push_back(line);
  }
  CHECK(rows.size() == 6);
  CHECK(blanks == 2);
  CHECK(rows.back().rfind("20,1.5,", 0) == 0);
}
