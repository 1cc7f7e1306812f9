#include "elmech/quadrature.hpp"

#include <stdexcept>
#include <string>

namespace elmech {
namespace {

QuadratureRule make_rule(int degree) {
  QuadratureRule rule;
  rule.degree = degree;
  auto add = [&rule](double xi, double eta, double w) {
    rule.points.emplace_back(xi, eta);
    rule.weights.push_back(0.5 * w);
  };
  // Permutations of barycentric (a, a, 1-2a).
  auto add_orbit = [&add](double a, double w) {
    const double b = 1.0 - 2.0 * a;
    add(a, a, w);
    add(b, a, w);
    add(a, b, w);
  };
  switch (degree) {
    case 1:
      add(1.0 / 3.0, 1.0 / 3.0, 1.0);
      break;
    case 2:
      add_orbit(1.0 / 6.0, 1.0 / 3.0);
      break;
    case 4:  // Dunavant, 6 points
      add_orbit(0.445948490915965, 0.223381589678011);
      add_orbit(0.091576213509771, 0.109951743655322);
      break;
    case 5:  // Dunavant, 7 points
      add(1.0 / 3.0, 1.0 / 3.0, 0.225);
      add_orbit(0.470142064105115, 0.132394152788506);
      add_orbit(0.101286507323456, 0.125939180544827);
      break;
    default:
      throw std::logic_error("no native rule");
  }
  return rule;
}

}  // namespace

const QuadratureRule& quadrature_rule(ElementKind, int requested_degree) {
  static const QuadratureRule rules[] = {make_rule(1), make_rule(2), make_rule(4), make_rule(5)};
  switch (requested_degree) {
    case 0:
    case 1:
      return rules[0];
    case 2:
      return rules[1];
    case 3:
    case 4:
      return rules[2];
    case 5:
      return rules[3];
    default:
      throw std::invalid_argument("unsupported quadrature degree " +
                                  std::to_string(requested_degree) + " (supported: 1..5)");
  }
}

std::string_view to_string(ElementKind kind) { return kind == ElementKind::Tri3 ? "TRI3" : "TRI6"; }

std::string_view to_string(Physics physics) {
  switch (physics) {
    case Physics::Mechanical:
      return "MECHANICAL";
    case Physics::Electric:
      return "ELECTRIC";
    case Physics::CoupledInterfaceLayer:
      return "COUPLED_INTERFACE_LAYER";
  }
  return "?";
}

}  // namespace elmech
