#include "elmech/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace elmech {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  return os;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<std::string>& header, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  for (const auto& h : header) os << "# " << h << "\n";
  os << "# ";
  for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << num(row[k]);
    os << "\n";
  }
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  auto os = open_out(path);
  write_csv(os, header, columns, rows);
  if (!os) throw IoError("write failed for '" + path + "'");
}

void write_vtk(std::ostream& os, const Mesh& mesh, const State& state, const std::string& title) {
  const int N = mesh.num_nodes();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << N << " double\n";
  for (int n = 0; n < N; ++n)
    os << num(mesh.coords(0, n) + state.u(2 * n)) << " " << num(mesh.coords(1, n) + state.u(2 * n + 1)) << " 0\n";
  std::size_t size = 0;
  for (const auto& e : mesh.elements) size += 1 + e.connectivity().size();
  os << "CELLS " << mesh.num_elements() << " " << size << "\n";
  for (const auto& e : mesh.elements) {
    os << e.connectivity().size();
    for (int n : e.connectivity()) os << " " << n;
    os << "\n";
  }
  os << "CELL_TYPES " << mesh.num_elements() << "\n";
  for (const auto& e : mesh.elements) os << (e.kind == ElementKind::Tri3 ? 5 : 22) << "\n";
  os << "POINT_DATA " << N << "\nVECTORS displacement double\n";
  for (int n = 0; n < N; ++n) os << num(state.u(2 * n)) << " " << num(state.u(2 * n + 1)) << " 0\n";
  os << "SCALARS potential double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < N; ++n) os << num(state.phi(n)) << "\n";
}

void write_vtk_file(const std::string& path, const Mesh& mesh, const State& state, const std::string& title) {
  auto os = open_out(path);
  write_vtk(os, mesh, state, title);
  if (!os) throw IoError("write failed for '" + path + "'");
}

VtkData read_vtk(std::istream& is) {
  VtkData d;
  std::string line, word;
  auto expect = [&](const std::string& w) {
    if (!(is >> word) || word != w) throw IoError("vtk: expected '" + w + "', got '" + word + "'");
  };
  std::getline(is, line);
  if (line.rfind("# vtk DataFile", 0) != 0) throw IoError("vtk: missing file identifier");
  std::getline(is, d.title);
  expect("ASCII");
  expect("DATASET");
  expect("UNSTRUCTURED_GRID");
  int n = 0, m = 0;
  std::size_t size = 0;
  expect("POINTS");
  is >> n >> word;
  d.points.resize(3, n);
  for (int i = 0; i < n; ++i) is >> d.points(0, i) >> d.points(1, i) >> d.points(2, i);
  expect("CELLS");
  is >> m >> size;
  d.cells.resize(m);
  for (auto& c : d.cells) {
    int k = 0;
    is >> k;
    c.resize(k);
    for (auto& v : c) is >> v;
  }
  expect("CELL_TYPES");
  is >> m;
  d.cell_types.resize(m);
  for (auto& t : d.cell_types) is >> t;
  expect("POINT_DATA");
  is >> n;
  while (is >> word) {
    if (word == "VECTORS") {
      is >> word >> line;
      d.displacement.resize(3, n);
      for (int i = 0; i < n; ++i) is >> d.displacement(0, i) >> d.displacement(1, i) >> d.displacement(2, i);
    } else if (word == "SCALARS") {
      is >> word >> line >> m;
      expect("LOOKUP_TABLE");
      is >> line;
      d.potential.resize(n);
      for (int i = 0; i < n; ++i) is >> d.potential(i);
    } else {
      throw IoError("vtk: unexpected section '" + word + "'");
    }
  }
  if (is.bad()) throw IoError("vtk: read error");
  return d;
}

RunLog::RunLog(std::string command, std::string config_hash, std::string config_dump)
    : command_(std::move(command)), hash_(std::move(config_hash)), dump_(std::move(config_dump)),
      start_(std::chrono::steady_clock::now()) {}

void RunLog::line(const std::string& text) { lines_.push_back(text); }

void RunLog::warning(const std::string& text) {
  warnings_.push_back(text);
  lines_.push_back("WARNING: " + text);
}

std::string RunLog::str() const {
  std::ostringstream os;
  os << "elmech " << kVersion << "\ncommand: " << command_ << "\nconfig hash: " << hash_ << "\n";
  os << "\n[resolved config]\n" << dump_ << "\n[run]\n";
  for (const auto& l : lines_) os << l << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "wall-clock: %.3f s\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
  os << buf;
  return os.str();
}

void RunLog::write(const std::string& path) const {
  auto os = open_out(path);
  os << str();
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace elmech
