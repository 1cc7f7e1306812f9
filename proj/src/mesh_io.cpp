#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>

#include "elmech/errors.hpp"
#include "elmech/mesh.hpp"

namespace elmech {
namespace {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::istringstream is{std::string(line)};
  for (std::string t; is >> t;) tokens.push_back(t);
  return tokens;
}

double parse_double(const std::string& token, int line) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError(line, "expected a number, got '" + token + "'");
  return v;
}

long parse_int(const std::string& token, int line) {
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError(line, "expected an integer, got '" + token + "'");
  return v;
}

std::optional<Physics> parse_physics(const std::string& s) {
  if (s == "MECHANICAL") return Physics::Mechanical;
  if (s == "ELECTRIC") return Physics::Electric;
  if (s == "COUPLED_INTERFACE_LAYER") return Physics::CoupledInterfaceLayer;
  return std::nullopt;
}

struct PendingElement {
  long id;
  ElementKind kind;
  std::string region;
  std::vector<long> nodes;
  int line;
};

}  // namespace

Mesh load_mesh(std::string_view text, std::vector<std::string>* warnings) {
  enum class Section { None, Nodes, Elements, NodeSet } section = Section::None;
  std::string current_set;
  std::vector<std::pair<long, Eigen::Vector2d>> nodes;
  std::vector<int> node_lines;
  std::vector<PendingElement> pending;
  std::map<std::string, std::vector<long>> sets;
  Mesh mesh;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokenize(line);
    if (tok.empty()) continue;

    const char first = tok[0][0];
    const bool header = (first >= 'A' && first <= 'Z') || (first >= 'a' && first <= 'z');
    if (header) {
      if (tok[0] == "NODES" && tok.size() == 1) {
        section = Section::Nodes;
      } else if (tok[0] == "ELEMENTS" && tok.size() == 1) {
        section = Section::Elements;
      } else if (tok[0] == "NODESET" && tok.size() == 2) {
        section = Section::NodeSet;
        current_set = tok[1];
        if (sets.count(current_set)) throw ParseError(line_no, "duplicate NODESET '" + current_set + "'");
        sets[current_set];
      } else if (tok[0] == "REGION" && tok.size() == 4) {
        const auto physics = parse_physics(tok[2]);
        if (!physics) throw ParseError(line_no, "unknown physics '" + tok[2] + "'");
        if (mesh.find_region(tok[1]) >= 0) throw ParseError(line_no, "duplicate REGION '" + tok[1] + "'");
        mesh.regions.push_back({tok[1], *physics, tok[3]});
        section = Section::None;
      } else if (tok[0] == "NODES" || tok[0] == "ELEMENTS" || tok[0] == "NODESET" || tok[0] == "REGION") {
        throw ParseError(line_no, "malformed " + tok[0] + " header");
      } else {
        throw ParseError(line_no, "unknown section '" + tok[0] + "'");
      }
      continue;
    }

    switch (section) {
      case Section::None:
        throw ParseError(line_no, "data outside of a section");
      case Section::Nodes:
        if (tok.size() != 3) throw ParseError(line_no, "node line needs: id x y");
        nodes.emplace_back(parse_int(tok[0], line_no),
                           Eigen::Vector2d(parse_double(tok[1], line_no), parse_double(tok[2], line_no)));
        node_lines.push_back(line_no);
        break;
      case Section::Elements: {
        if (tok.size() < 3) throw ParseError(line_no, "element line needs: id kind region nodes...");
        PendingElement e{parse_int(tok[0], line_no), ElementKind::Tri3, tok[2], {}, line_no};
        if (tok[1] == "TRI3") e.kind = ElementKind::Tri3;
        else if (tok[1] == "TRI6") e.kind = ElementKind::Tri6;
        else throw ParseError(line_no, "unknown element kind '" + tok[1] + "'");
        if (int(tok.size()) != 3 + node_count(e.kind))
          throw ParseError(line_no, "element " + tok[0] + " needs " + std::to_string(node_count(e.kind)) + " nodes");
        for (std::size_t k = 3; k < tok.size(); ++k) e.nodes.push_back(parse_int(tok[k], line_no));
        pending.push_back(std::move(e));
        break;
      }
      case Section::NodeSet:
        for (const auto& t : tok) sets[current_set].push_back(parse_int(t, line_no));
        break;
    }
  }

  const long N = long(nodes.size());
  mesh.coords.resize(2, N);
  std::vector<bool> seen(N, false);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const long id = nodes[k].first;
    if (id < 0 || id >= N || seen[id])
      throw ParseError(node_lines[k], "node ids must be unique and dense in 0.." + std::to_string(N - 1));
    seen[id] = true;
    mesh.coords.col(id) = nodes[k].second;
  }

  std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t k = 0; k < pending.size(); ++k) {
    const auto& p = pending[k];
    if (p.id != long(k)) throw ParseError(p.line, "element ids must be unique and dense from 0");
    Element e;
    e.id = int(p.id);
    e.kind = p.kind;
    e.region = mesh.find_region(p.region);
    if (e.region < 0) throw ParseError(p.line, "element " + std::to_string(p.id) + " uses undeclared region '" + p.region + "'");
    for (std::size_t a = 0; a < p.nodes.size(); ++a) {
      if (p.nodes[a] < 0 || p.nodes[a] >= N)
        throw ParseError(p.line, "element " + std::to_string(p.id) + " references node " +
                                     std::to_string(p.nodes[a]) + " beyond range");
      e.nodes[a] = int(p.nodes[a]);
    }
    const auto X = mesh.element_coords(e);
    const double signed_area = (X(0, 1) - X(0, 0)) * (X(1, 2) - X(1, 0)) - (X(0, 2) - X(0, 0)) * (X(1, 1) - X(1, 0));
    if (signed_area < 0) {
      std::swap(e.nodes[1], e.nodes[2]);
      if (e.kind == ElementKind::Tri6) std::swap(e.nodes[3], e.nodes[5]);
      if (warnings) warnings->push_back("element " + std::to_string(e.id) + " was clockwise; reordered");
    }
    mesh.elements.push_back(e);
  }

  for (auto& [name, ids] : sets) {
    std::vector<int> v;
    for (long id : ids) {
      if (id < 0 || id >= N) throw ValidationError("node set '" + name + "' references node " + std::to_string(id) + " beyond range");
      v.push_back(int(id));
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    mesh.node_sets[name] = std::move(v);
  }

  const auto diagnostics = validate(mesh);
  if (!diagnostics.empty()) {
    std::string msg = "mesh failed validation:";
    for (const auto& d : diagnostics) msg += "\n  " + d.message;
    throw ValidationError(msg);
  }
  return mesh;
}

std::string write_mesh(const Mesh& mesh) {
  std::ostringstream os;
  char buf[96];
  os << "# elmech mesh, SI units\n";
  for (const auto& r : mesh.regions)
    os << "REGION " << r.name << ' ' << to_string(r.physics) << ' ' << r.material << '\n';
  os << "NODES\n";
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", i, mesh.coords(0, i), mesh.coords(1, i));
    os << buf;
  }
  os << "ELEMENTS\n";
  for (const auto& e : mesh.elements) {
    os << e.id << ' ' << to_string(e.kind) << ' ' << mesh.regions[e.region].name;
    for (int n : e.connectivity()) os << ' ' << n;
    os << '\n';
  }
  for (const auto& [name, ids] : mesh.node_sets) {
    os << "NODESET " << name << '\n';
    for (std::size_t k = 0; k < ids.size(); ++k) os << ids[k] << ((k + 1) % 16 == 0 || k + 1 == ids.size() ? '\n' : ' ');
  }
  return os.str();
}

}  // namespace elmech
