#include "elmech/lumped.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace elmech {

namespace {

void require_valid(const LumpedPlate& p) {
  if (!p.valid()) throw std::invalid_argument("lumped plate parameters must all be positive");
}

double voltage_at(const LumpedPlate& p, double x) {
  return std::sqrt(2.0 * p.k * x * (p.g - x) * (p.g - x) / (p.eps * p.A));
}

}  // namespace

double LumpedPlate::period() const { return 2.0 * std::numbers::pi * std::sqrt(m / k); }

LumpedFold lumped_static_pullin(const LumpedPlate& p) {
  require_valid(p);
  return {std::sqrt(8.0 * p.k * p.g * p.g * p.g / (27.0 * p.eps * p.A)), p.g / 3.0};
}

LumpedFold lumped_static_pullin_search(const LumpedPlate& p, int grid) {
  require_valid(p);
  int best = 1;
  for (int i = 1; i < grid; ++i)
    if (voltage_at(p, p.g * i / grid) > voltage_at(p, p.g * best / grid)) best = i;
  // Bisection on the sign of a central difference of V^2: the slope changes
  // sign linearly at the fold, unlike V itself which is flat there.
  auto v2 = [&](double x) { return x * (p.g - x) * (p.g - x); };
  const double h = 1e-7 * p.g;
  double a = p.g * (best - 1) / grid, b = p.g * (best + 1) / grid;
  while (b - a > 1e-15 * p.g) {
    const double mid = 0.5 * (a + b);
    (v2(mid + h) > v2(mid - h) ? a : b) = mid;
  }
  const double x = 0.5 * (a + b);
  return {voltage_at(p, x), x};
}

double lumped_dynamic_pullin(const LumpedPlate& p) {
  require_valid(p);
  return std::sqrt(p.k * p.g * p.g * p.g / (4.0 * p.eps * p.A));
}

double lumped_static_displacement(const LumpedPlate& p, double V) {
  require_valid(p);
  const auto fold = lumped_static_pullin(p);
  if (std::abs(V) > fold.V_pi) throw std::invalid_argument("no static equilibrium above the pull-in voltage");
  // k x - F(x) is increasing on [0, g/3] where the stable root lies.
  double lo = 0.0, hi = fold.x_pi;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * p.g; ++it) {
    const double mid = 0.5 * (lo + hi);
    (p.k * mid < p.force(mid, V) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LumpedTrajectory lumped_integrate(const LumpedPlate& p, double V, double dt, double T, double contact_fraction,
                                  int sample_stride) {
  require_valid(p);
  if (!(dt > 0) || !(T > 0)) throw std::invalid_argument("lumped_integrate: dt and T must be positive");
  LumpedTrajectory tr;
  const double contact = contact_fraction * p.g;
  auto accel = [&](double x) { return (p.force(x, V) - p.k * x) / p.m; };
  auto energy = [&](double x, double v) {
    return 0.5 * p.m * v * v + 0.5 * p.k * x * x - p.eps * p.A * V * V / (2.0 * (p.g - x));
  };
  double x = 0.0, v = 0.0, t = 0.0;
  const double e0 = energy(x, v);
  auto sample = [&] {
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.v.push_back(v);
    tr.energy.push_back(energy(x, v));
    if (e0 != 0.0) tr.max_energy_error = std::max(tr.max_energy_error, std::abs(tr.energy.back() - e0) / std::abs(e0));
  };
  sample();
  const long steps = std::lround(std::ceil(T / dt - 1e-9));
  for (long n = 1; n <= steps; ++n) {
    const double h = std::min(dt, T - t);
    // Probe the stages: a stage beyond the contact plane means contact within this step.
    const double k1x = v, k1v = accel(x);
    const double x2 = x + 0.5 * h * k1x;
    const double k2x = v + 0.5 * h * k1v, k2v = x2 < p.g ? accel(x2) : 0.0;
    const double x3 = x + 0.5 * h * k2x;
    const double k3x = v + 0.5 * h * k2v, k3v = x3 < p.g ? accel(x3) : 0.0;
    const double x4 = x + h * k3x;
    const double k4x = v + h * k3v, k4v = x4 < p.g ? accel(x4) : 0.0;
    const double x1 = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    const double v1 = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (x1 >= contact || x2 >= p.g || x3 >= p.g || x4 >= p.g || !std::isfinite(x1)) {
      const double frac = std::isfinite(x1) && x1 > x ? std::clamp((contact - x) / (x1 - x), 0.0, 1.0) : 1.0;
      tr.kind = TrajectoryClass::PullIn;
      tr.contact_time = t + frac * h;
      tr.t.push_back(tr.contact_time);
      tr.x.push_back(contact);
      tr.v.push_back(v + frac * (v1 - v));
      tr.energy.push_back(energy(contact, tr.v.back()));
      tr.max_x = contact;
      return tr;
    }
    x = x1;
    v = v1;
    t += h;
    tr.max_x = std::max(tr.max_x, x);
    if (n % std::max(sample_stride, 1) == 0 || n == steps) sample();
  }
  tr.kind = TrajectoryClass::Bounded;
  return tr;
}

LumpedBisection lumped_dynamic_pullin_ode(const LumpedPlate& p, double horizon_periods, int steps_per_period,
                                          double rel_tol) {
  const auto fold = lumped_static_pullin(p);
  const double dt = p.period() / steps_per_period, T = horizon_periods * p.period();
  LumpedBisection res;
  double lo = 0.5 * fold.V_pi, hi = fold.V_pi;
  auto kind = [&](double V) {
    ++res.runs;
    return lumped_integrate(p, V, dt, T, 0.95, steps_per_period).kind;
  };
  if (kind(lo) != TrajectoryClass::Bounded || kind(hi) != TrajectoryClass::PullIn)
    throw std::runtime_error("lumped bisection bracket does not straddle the dynamic pull-in voltage");
  while (hi - lo > rel_tol * fold.V_pi) {
    const double mid = 0.5 * (lo + hi);
    (kind(mid) == TrajectoryClass::PullIn ? hi : lo) = mid;
  }
  res.V_stable = lo;
  res.V_unstable = hi;
  res.V_dpi = 0.5 * (lo + hi);
  return res;
}

}  // namespace elmech
