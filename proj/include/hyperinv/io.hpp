#pragma once

// CSV and JSON artifacts. Numbers are written with %.17g so files are
// byte-identical across runs with the same inputs.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperinv/illposed.hpp"
#include "hyperinv/inversion.hpp"
#include "hyperinv/sensitivity.hpp"

namespace hyperinv::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v);

/// Header row then one row per matrix row; `lead` (if non-empty) becomes the first column.
void write_csv(const fs::path& path, const std::vector<std::string>& header, const Mat& values,
               const Vec& lead = Vec());

struct CsvTable {
  std::vector<std::string> header;
  Mat values;
};

/// Reads a numeric CSV with one header row.
CsvTable read_csv(const fs::path& path);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

json sparse_to_json(const SpMat& m);
json mesh_to_json(const Discretization& disc);
/// A, B, C, Q at time node n as triplets.
json operators_to_json(const OperatorTimeline& tl, int n);

/// Field CSV: column "t" then one column per spatial node, one row per time node.
void write_field_csv(const fs::path& path, const ParameterField& f, const Discretization& disc);
/// Accepts the layout above, with or without the leading "t" column.
ParameterField read_field_csv(const fs::path& path, const TimeGrid& grid, int num_nodes);

/// Column label of each free DOF: "n<node>" or "n<node>x" / "n<node>y".
std::vector<std::string> dof_labels(const Discretization& disc);

/// <stem>_u.csv, <stem>_du.csv and <stem>.json in `dir`; returns the files written.
std::vector<fs::path> write_trajectory(const fs::path& dir, const Trajectory& traj,
                                       const Discretization& disc,
                                       const std::string& stem = "trajectory");

json spec_to_json(const ObservationSpec& spec);
/// CSV of values plus a JSON sidecar with the observation spec.
void write_data(const fs::path& csv, const fs::path& sidecar, const DataVector& data,
                const Discretization& disc);
DataVector read_data(const fs::path& csv, const fs::path& sidecar);

/// One CSV per field, named <prefix>_<field>.csv.
std::vector<fs::path> write_gradient(const fs::path& dir, const std::string& prefix,
                                     const GradientFields& g, const Discretization& disc);

json dot_test_record(const DotTestResult& r, AdjointMode mode, double dt);

void write_illposed_table(const fs::path& path, const IllposedResult& r);
void write_singular_values(const fs::path& path, const SvdProbeResult& r);
void write_history(const fs::path& path, const IterateHistory& h);

std::string sha256_file(const fs::path& path);
std::string sha256_string(const std::string& data);

/// Files produced by a run, hashed when the manifest is written.
class Manifest {
 public:
  explicit Manifest(fs::path root) : root_(std::move(root)) {}
  void add(const fs::path& file);
  void add(const std::vector<fs::path>& files);
  /// Writes manifest.json under the root with every artifact's hash and size.
  fs::path write(json meta) const;
  const std::vector<fs::path>& files() const { return files_; }

 private:
  fs::path root_;
  std::vector<fs::path> files_;
};

}  // namespace hyperinv::io
