#include "elmech/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace elmech {

namespace {

struct Unit {
  const char* symbol;
  const char* dimension;
  double factor;
};

constexpr Unit kUnits[] = {
    {"m", "length", 1.0},          {"mm", "length", 1e-3},         {"um", "length", 1e-6},
    {"\xC2\xB5m", "length", 1e-6}, {"nm", "length", 1e-9},         {"V", "voltage", 1.0},
    {"mV", "voltage", 1e-3},       {"kV", "voltage", 1e3},         {"Pa", "pressure", 1.0},
    {"kPa", "pressure", 1e3},      {"MPa", "pressure", 1e6},       {"GPa", "pressure", 1e9},
    {"kg/m^3", "density", 1.0},    {"kg/m3", "density", 1.0},      {"g/cm^3", "density", 1e3},
    {"s", "time", 1.0},            {"ms", "time", 1e-3},           {"us", "time", 1e-6},
    {"\xC2\xB5s", "time", 1e-6},   {"ns", "time", 1e-9},           {"N/m^2", "stiffness", 1.0},
    {"N/m/m", "stiffness", 1.0},   {"Pa", "stiffness", 1.0},       {"F/m", "permittivity", 1.0},
    {"V/s", "rate", 1.0},          {"V/ms", "rate", 1e3},          {"V/us", "rate", 1e6},
};

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  boost::split(items, text, boost::is_any_of(","));
  for (auto& s : items) boost::trim(s);
  if (items.size() == 1 && items[0].empty()) items.clear();
  return items;
}

struct RawValue {
  std::string text;
  bool used = false;
};

// Typed access to the raw key-value table; records every resolved value.
class Reader {
 public:
  Reader(std::map<std::string, std::map<std::string, RawValue>> raw, std::map<std::string, std::string>& resolved)
      : raw_(std::move(raw)), resolved_(resolved) {}

  bool has(const std::string& section, const std::string& key) const {
    auto s = raw_.find(section);
    return s != raw_.end() && s->second.count(key);
  }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) {
    auto s = raw_.find(section);
    if (s != raw_.end()) {
      auto k = s->second.find(key);
      if (k != s->second.end()) {
        k->second.used = true;
        return k->second.text;
      }
    }
    return fallback;
  }

  double number(const std::string& section, const std::string& key, const std::string& dimension, double fallback) {
    const std::string t = text(section, key, "");
    double v = fallback;
    if (!t.empty()) {
      try {
        v = parse_quantity(t, dimension);
      } catch (const ConfigError& e) {
        throw ConfigError(section + "." + key + ": " + e.what());
      }
    }
    resolved_[section + "." + key] = format_number(v);
    return v;
  }

  int integer(const std::string& section, const std::string& key, int fallback) {
    const double v = number(section, key, "none", fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(section + "." + key + ": expected an integer");
    return int(v);
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) {
    std::string t = boost::to_lower_copy(text(section, key, fallback ? "true" : "false"));
    bool v;
    if (t == "true" || t == "yes" || t == "1" || t == "on") v = true;
    else if (t == "false" || t == "no" || t == "0" || t == "off") v = false;
    else throw ConfigError(section + "." + key + ": expected a boolean, got '" + t + "'");
    resolved_[section + "." + key] = v ? "true" : "false";
    return v;
  }

  std::string choice(const std::string& section, const std::string& key, const std::vector<std::string>& options) {
    const std::string t = boost::to_lower_copy(text(section, key, options.front()));
    if (std::find(options.begin(), options.end(), t) == options.end())
      throw ConfigError(section + "." + key + ": '" + t + "' is not one of " + boost::join(options, ", "));
    resolved_[section + "." + key] = t;
    return t;
  }

  std::string string(const std::string& section, const std::string& key, const std::string& fallback) {
    const std::string t = text(section, key, fallback);
    resolved_[section + "." + key] = t;
    return t;
  }

  std::vector<double> list(const std::string& section, const std::string& key, const std::string& dimension,
                           const std::string& fallback) {
    auto items = split_list(text(section, key, fallback));
    // A unit on the last item only applies to the whole list.
    std::string shared;
    if (!items.empty()) {
      const auto& last = items.back();
      const auto pos = last.find_first_of(" \t");
      if (pos != std::string::npos) shared = last.substr(pos);
    }
    std::vector<double> out;
    std::vector<std::string> shown;
    for (auto& item : items) {
      const bool bare = item.find_first_of(" \t") == std::string::npos;
      try {
        out.push_back(parse_quantity(bare ? item + shared : item, dimension));
      } catch (const ConfigError& e) {
        throw ConfigError(section + "." + key + ": " + e.what());
      }
      shown.push_back(format_number(out.back()));
    }
    resolved_[section + "." + key] = boost::join(shown, ", ");
    return out;
  }

  std::vector<std::string> sections_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, keys] : raw_)
      if (boost::starts_with(name, prefix)) out.push_back(name);
    return out;
  }

  void reject_unused() const {
    for (const auto& [section, keys] : raw_) {
      if (keys.empty()) throw ConfigError("unknown or empty section [" + section + "]");
      for (const auto& [key, value] : keys)
        if (!value.used) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
  }

 private:
  std::map<std::string, std::map<std::string, RawValue>> raw_;
  std::map<std::string, std::string>& resolved_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(dump())));
  return buf;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [key, value] : resolved) out += key + " = " + value + "\n";
  return out;
}

double parse_quantity(const std::string& text, const std::string& dimension) {
  const std::string t = boost::trim_copy(text);
  std::size_t used = 0;
  double value;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + t + "'");
  }
  const std::string unit = boost::trim_copy(t.substr(used));
  if (!std::isfinite(value)) throw ConfigError("non-finite value '" + t + "'");
  if (unit.empty()) return value;
  for (const auto& u : kUnits)
    if (unit == u.symbol && dimension == u.dimension) return value * u.factor;
  for (const auto& u : kUnits)
    if (unit == u.symbol) throw ConfigError("unit '" + unit + "' is a " + u.dimension + ", expected " + dimension);
  throw ConfigError("unknown unit '" + unit + "'");
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides, const std::string& name) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  std::map<std::string, std::map<std::string, RawValue>> raw;
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    auto& sec = raw[section];
    for (const auto& [key, value] : keys) sec[key].text = boost::trim_copy(value.data());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.substr(0, eq).rfind('.');
    if (eq == std::string::npos || dot == std::string::npos || dot == 0)
      throw ConfigError("override '" + o + "' is not of the form section.key=value");
    raw[boost::trim_copy(o.substr(0, dot))][boost::trim_copy(o.substr(dot + 1, eq - dot - 1))].text =
        boost::trim_copy(o.substr(eq + 1));
  }

  RunConfig cfg;
  cfg.name = name;
  Reader r(std::move(raw), cfg.resolved);

  // geometry
  auto& geo = cfg.geometry;
  const auto model = r.choice("geometry", "model", {"beam", "parallel_plate", "rigid_plate"});
  geo.model = model == "beam" ? ModelKind::Beam : model == "parallel_plate" ? ModelKind::ParallelPlate : ModelKind::RigidPlate;
  auto& b = geo.beam;
  b.length = r.number("geometry", "length", "length", 300e-6);
  b.thickness = r.number("geometry", "thickness", "length", 0.5e-6);
  b.gap = r.number("geometry", "gap", "length", 6e-6);
  b.electrode_length = r.number("geometry", "electrode_length", "length", 60e-6);
  b.electrode_centers = r.list("geometry", "electrode_centers", "length", "75, 150, 225 um");
  b.nx = r.integer("geometry", "nx", 60);
  b.ny_beam = r.integer("geometry", "ny_beam", 2);
  b.ny_gap = r.integer("geometry", "ny_gap", 4);
  b.order = r.integer("geometry", "order", 2);
  b.beam_material = r.string("geometry", "beam_material", "silicon");
  b.gap_material = r.string("geometry", "gap_material", "vacuum");
  require(b.length > 0, "geometry.length must be positive");
  require(b.thickness > 0, "geometry.thickness must be positive");
  require(b.gap > 0, "geometry.gap must be positive");
  require(b.electrode_length > 0, "geometry.electrode_length must be positive");
  require(b.nx >= 1 && b.ny_beam >= 1 && b.ny_gap >= 1, "geometry: subdivisions must be at least 1");
  require(b.order == 1 || b.order == 2, "geometry.order must be 1 or 2");
  if (geo.model != ModelKind::Beam) {
    b.electrode_centers = {0.5 * b.length};
    b.electrode_length = b.length;
  }

  // materials: built-in silicon and vacuum, overridable, plus any [material.<name>]
  std::set<std::string> names{b.beam_material, b.gap_material};
  for (const auto& s : r.sections_with_prefix("material.")) names.insert(s.substr(9));
  for (const auto& m : names) {
    const std::string sec = "material." + m;
    const bool electric = r.has(sec, "permittivity") || (m == "vacuum" && !r.has(sec, "E"));
    if (electric) {
      ElectricMaterial em;
      em.permittivity = r.number(sec, "permittivity", "permittivity", kVacuumPermittivity);
      require(em.admissible(), sec + ": permittivity must be positive");
      cfg.materials.electric[m] = em;
    } else {
      if (m != "silicon" && !r.has(sec, "E")) throw ConfigError("material '" + m + "' is referenced but not defined");
      MechanicalMaterial mm;
      mm.E = r.number(sec, "E", "pressure", mm.E);
      mm.nu = r.number(sec, "nu", "none", mm.nu);
      mm.rho = r.number(sec, "rho", "density", mm.rho);
      mm.plane = r.choice(sec, "plane", {"strain", "stress"}) == "strain" ? PlaneAssumption::Strain : PlaneAssumption::Stress;
      require(mm.admissible(), sec + ": need E > 0, -1 < nu < 0.5, rho >= 0");
      cfg.materials.mechanical[m] = mm;
    }
  }
  require(cfg.materials.mechanical.count(b.beam_material), "geometry.beam_material must name a mechanical material");
  require(cfg.materials.electric.count(b.gap_material), "geometry.gap_material must name an electric material");

  // bcs
  auto& bc = cfg.bcs;
  bc.electrode_coefficients = r.list("bcs", "electrode_coefficients", "none", "0, 1, 0");
  if (geo.model != ModelKind::Beam) bc.electrode_coefficients = {1.0};
  require(bc.electrode_coefficients.size() == b.electrode_centers.size(),
          "bcs.electrode_coefficients needs one value per electrode (" + std::to_string(b.electrode_centers.size()) + ")");
  if (geo.model == ModelKind::RigidPlate && !r.has("bcs", "spring_stiffness"))
    throw ConfigError("missing required key bcs.spring_stiffness for model rigid_plate");
  bc.spring_stiffness = r.number("bcs", "spring_stiffness", "stiffness", 0.0);
  require(bc.spring_stiffness >= 0, "bcs.spring_stiffness must be non-negative");
  bc.morph.mode = r.choice("bcs", "morph_mode", {"pseudo_elastic", "slaved"}) == "slaved" ? MorphMode::Slaved : MorphMode::PseudoElastic;
  bc.morph.scale = r.number("bcs", "morph_scale", "none", 1e-4);
  bc.morph.truncation = r.number("bcs", "morph_truncation", "none", 1e-3);
  require(bc.morph.scale > 0 && bc.morph.truncation >= 0 && bc.morph.truncation < 1, "bcs: invalid morphing settings");

  // static
  auto& st = cfg.statics;
  auto& sv = st.solver;
  st.voltage = r.number("static", "voltage", "voltage", 100.0);
  sv.tol_residual = r.number("static", "tol_residual", "none", sv.tol_residual);
  sv.tol_increment = r.number("static", "tol_increment", "none", sv.tol_increment);
  sv.max_iter = r.integer("static", "max_iter", sv.max_iter);
  sv.max_halvings = r.integer("static", "max_halvings", sv.max_halvings);
  sv.initial_dV = r.number("static", "initial_dV", "voltage", sv.initial_dV);
  sv.radius_min_factor = r.number("static", "radius_min_factor", "none", sv.radius_min_factor);
  sv.radius_max_factor = r.number("static", "radius_max_factor", "none", sv.radius_max_factor);
  sv.target_iterations = r.integer("static", "target_iterations", sv.target_iterations);
  sv.post_fold_points = r.integer("static", "post_fold_points", sv.post_fold_points);
  sv.fold_refinements = r.integer("static", "fold_refinements", sv.fold_refinements);
  sv.max_steps = r.integer("static", "max_steps", sv.max_steps);
  sv.staggered_max_outer = r.integer("static", "staggered_max_outer", sv.staggered_max_outer);
  sv.staggered_tol = r.number("static", "staggered_tol", "none", sv.staggered_tol);
  st.staggered_dV = r.number("static", "staggered_dV", "voltage", st.staggered_dV);
  st.staggered_refine = r.number("static", "staggered_refine", "voltage", st.staggered_refine);
  st.probe_x = r.number("static", "probe_x", "length", -1.0);
  sv.gap = b.gap;
  require(sv.tol_residual > 0 && sv.tol_increment > 0, "static: tolerances must be positive");
  require(sv.max_iter >= 1 && sv.max_halvings >= 0 && sv.max_steps >= 1, "static: iteration limits must be positive");
  require(sv.radius_min_factor > 0 && sv.radius_max_factor >= 1, "static: invalid radius bounds");
  require(sv.target_iterations >= 2, "static.target_iterations must be at least 2");
  require(sv.post_fold_points >= 0, "static.post_fold_points must be non-negative");
  require(sv.fold_refinements >= 0, "static.fold_refinements must be non-negative");
  require(st.staggered_dV > 0 && st.staggered_refine > 0 && sv.staggered_tol > 0, "static: staggered settings must be positive");

  // dynamic
  auto& dy = cfg.dynamic;
  auto& nm = dy.newmark;
  const auto kind = r.choice("dynamic", "schedule", {"step", "ramp", "table"});
  dy.schedule.kind = kind == "step" ? ScheduleKind::Step : kind == "ramp" ? ScheduleKind::Ramp : ScheduleKind::Table;
  dy.schedule.amplitude = r.number("dynamic", "voltage", "voltage", 100.0);
  dy.schedule.step_time = r.number("dynamic", "step_time", "time", 0.0);
  dy.schedule.ramp_rate = r.number("dynamic", "ramp_rate", "rate", 0.0);
  {
    const std::string table = r.string("dynamic", "table", "");
    for (const auto& item : split_list(table)) {
      std::vector<std::string> tv;
      boost::split(tv, item, boost::is_any_of(":"));
      if (tv.size() != 2) throw ConfigError("dynamic.table: entries must read time:voltage");
      dy.schedule.table.emplace_back(parse_quantity(tv[0], "time"), parse_quantity(tv[1], "voltage"));
    }
    for (std::size_t k = 1; k < dy.schedule.table.size(); ++k)
      require(dy.schedule.table[k].first > dy.schedule.table[k - 1].first, "dynamic.table: times must increase");
    require(dy.schedule.kind != ScheduleKind::Table || !dy.schedule.table.empty(), "dynamic.table is required for schedule = table");
    require(dy.schedule.kind != ScheduleKind::Ramp || dy.schedule.ramp_rate > 0, "dynamic.ramp_rate must be positive for schedule = ramp");
  }
  nm.alpha = r.number("dynamic", "alpha", "none", 0.0);
  nm.beta = r.number("dynamic", "beta", "none", 0.25 * (1 - nm.alpha) * (1 - nm.alpha));
  nm.gamma = r.number("dynamic", "gamma", "none", 0.5 - nm.alpha);
  nm.dt = r.number("dynamic", "dt", "time", 0.0);
  dy.steps_per_period = r.integer("dynamic", "steps_per_period", 200);
  dy.duration_periods = r.number("dynamic", "duration_periods", "none", 10.0);
  dy.horizon_periods = r.number("dynamic", "horizon_periods", "none", 10.0);
  nm.contact_fraction = r.number("dynamic", "contact_fraction", "none", 0.95);
  nm.tol_residual = r.number("dynamic", "tol_residual", "none", nm.tol_residual);
  nm.tol_increment = r.number("dynamic", "tol_increment", "none", nm.tol_increment);
  nm.max_iter = r.integer("dynamic", "max_iter", nm.max_iter);
  nm.max_halvings = r.integer("dynamic", "max_halvings", nm.max_halvings);
  nm.snapshot_stride = r.integer("dynamic", "snapshot_stride", 0);
  nm.rayleigh_mass = r.number("dynamic", "rayleigh_mass", "none", 0.0);
  nm.rayleigh_stiffness = r.number("dynamic", "rayleigh_stiffness", "time", 0.0);
  nm.gap = b.gap;
  dy.v_low = r.number("dynamic", "v_low", "voltage", 0.0);
  dy.v_high = r.number("dynamic", "v_high", "voltage", 0.0);
  dy.tol_V = r.number("dynamic", "tol_V", "voltage", 0.5);
  dy.prelude_samples = r.integer("dynamic", "prelude_samples", 0);
  require(nm.alpha >= -1.0 / 3.0 && nm.alpha <= 0, "dynamic.alpha must lie in [-1/3, 0]");
  require(nm.gamma >= 0.5 && 2 * nm.beta >= nm.gamma, "dynamic: need 2 beta >= gamma >= 1/2");
  require(nm.dt >= 0 && dy.steps_per_period >= 1, "dynamic: invalid time step");
  require(dy.duration_periods > 0 && dy.horizon_periods > 0, "dynamic: periods must be positive");
  require(nm.contact_fraction > 0 && nm.contact_fraction <= 1, "dynamic.contact_fraction must lie in (0, 1]");
  require(nm.rayleigh_mass >= 0 && nm.rayleigh_stiffness >= 0, "dynamic: Rayleigh coefficients must be non-negative");
  require(dy.tol_V > 0 && dy.prelude_samples >= 0 && nm.snapshot_stride >= 0, "dynamic: invalid search settings");

  cfg.modal.n_modes = r.integer("modal", "n_modes", 6);
  cfg.modal.voltage = r.number("modal", "voltage", "voltage", 0.0);
  require(cfg.modal.n_modes >= 1, "modal.n_modes must be at least 1");

  cfg.output.directory = r.string("output", "directory", ".");
  cfg.output.prefix = r.string("output", "prefix", "");
  cfg.output.vtk = r.boolean("output", "vtk", true);
  if (cfg.output.prefix.empty()) cfg.output.prefix = name;

  r.reject_unused();
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (!fs::exists(p) && !p.has_parent_path()) {
    fs::path shipped = fs::path(ELMECH_CONFIG_DIR) / p;
    if (!shipped.has_extension()) shipped += ".ini";
    if (fs::exists(shipped)) p = shipped;
  }
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, p.stem().string());
}

}  // namespace elmech
