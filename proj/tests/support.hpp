#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "elmech/config.hpp"
#include "elmech/mesh.hpp"
#include "elmech/scenario.hpp"

namespace elmech::test {

/// Seeded source for the hand-rolled property generators.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(engine_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(engine_); }
  bool coin() { return integer(0, 1) == 1; }
  Eigen::VectorXd vector(int n, double scale) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(-scale, scale);
    return v;
  }

  /// Counter-clockwise straight-sided triangle with bounded aspect ratio,
  /// size about `h`, anywhere in a box of side 10 h.
  NodeCoords<double> triangle(ElementKind kind, double h) {
    NodeCoords<double> X(2, node_count(kind));
    for (;;) {
      const Eigen::Vector2d o(uniform(-5 * h, 5 * h), uniform(-5 * h, 5 * h));
      const double a0 = uniform(0, 2 * M_PI);
      const double a1 = a0 + uniform(0.6, 1.4) * 2 * M_PI / 3;
      const double a2 = a1 + uniform(0.6, 1.4) * 2 * M_PI / 3;
      const double r0 = h * uniform(0.6, 1.0), r1 = h * uniform(0.6, 1.0), r2 = h * uniform(0.6, 1.0);
      X.col(0) = o + r0 * Eigen::Vector2d(std::cos(a0), std::sin(a0));
      X.col(1) = o + r1 * Eigen::Vector2d(std::cos(a1), std::sin(a1));
      X.col(2) = o + r2 * Eigen::Vector2d(std::cos(a2), std::sin(a2));
      const Eigen::Vector2d e1 = X.col(1) - X.col(0), e2 = X.col(2) - X.col(0);
      if (e1.x() * e2.y() - e1.y() * e2.x() > 0.2 * h * h) break;
    }
    if (kind == ElementKind::Tri6) {
      X.col(3) = 0.5 * (X.col(0) + X.col(1));
      X.col(4) = 0.5 * (X.col(1) + X.col(2));
      X.col(5) = 0.5 * (X.col(2) + X.col(0));
    }
    return X;
  }

  ElementKind kind() { return coin() ? ElementKind::Tri6 : ElementKind::Tri3; }

 private:
  std::mt19937_64 engine_;
};

/// Relative difference with an absolute floor given by `scale`.
inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double scale) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

/// A shipped config with overrides applied.
inline RunConfig shipped(const std::string& name, const std::vector<std::string>& overrides = {}) {
  return load_config(name, overrides);
}

/// Small beam (coarse mesh) for fast solver tests.
inline RunConfig small_beam(const std::vector<std::string>& extra = {}, const std::string& name = "beam_center_electrode") {
  std::vector<std::string> o{"geometry.nx=20", "geometry.ny_beam=1", "geometry.ny_gap=2"};
  o.insert(o.end(), extra.begin(), extra.end());
  return load_config(name, o);
}

}  // namespace elmech::test
