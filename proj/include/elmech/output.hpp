#pragma once

#include <chrono>
#include <iosfwd>
#include <string>
#include <vector>

#include "elmech/dofmap.hpp"
#include "elmech/mesh.hpp"

namespace elmech {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Comma-separated table. Header lines are written with a leading "# ",
/// followed by one "# " line of column names (with units).
void write_csv(std::ostream& os, const std::vector<std::string>& header, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows);

/// Legacy ASCII VTK 3.0 unstructured grid on the displaced coordinates with
/// point data `displacement` (z = 0) and `potential`. Values use %.17g.
void write_vtk(std::ostream& os, const Mesh& mesh, const State& state, const std::string& title);
void write_vtk_file(const std::string& path, const Mesh& mesh, const State& state, const std::string& title);

struct VtkData {
  std::string title;
  Eigen::Matrix3Xd points;
  std::vector<std::vector<int>> cells;
  std::vector<int> cell_types;
  Eigen::Matrix3Xd displacement;
  Eigen::VectorXd potential;
};

/// Reader for the files written by write_vtk.
VtkData read_vtk(std::istream& is);

/// Text log of one run: config hash, version, resolved config, messages and
/// wall-clock time.
class RunLog {
 public:
  RunLog(std::string command, std::string config_hash, std::string config_dump);
  void line(const std::string& text);
  void warning(const std::string& text);
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::string command_, hash_, dump_;
  std::vector<std::string> lines_, warnings_;
  std::chrono::steady_clock::time_point start_;
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace elmech
