#pragma once

#include <string>
#include <string_view>

namespace elmech {

enum class ElementKind { Tri3, Tri6 };

constexpr int node_count(ElementKind kind) { return kind == ElementKind::Tri3 ? 3 : 6; }

enum class Physics { Mechanical, Electric, CoupledInterfaceLayer };

constexpr bool has_mechanics(Physics p) { return p != Physics::Electric; }
constexpr bool has_electrostatics(Physics p) { return p != Physics::Mechanical; }

std::string_view to_string(ElementKind kind);
std::string_view to_string(Physics physics);

}  // namespace elmech
