#pragma once

// Configuration-driven driver: JSON config -> experiment -> CSV/JSON artifacts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hyperinv/io.hpp"

namespace hyperinv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum class ExperimentKind { kForward, kDotTest, kTaylorTest, kIllposed, kSvd, kInvert, kConvergence };

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ObservationConfig {
  bool full_field = true;
  std::vector<int> indices;
};

struct ExperimentOptions {
  ExperimentKind kind = ExperimentKind::kForward;
  ObservationConfig observation;
  // forward
  std::vector<int> dump_operators;
  bool energy = false;
  // dot-test, convergence
  AdjointMode mode = AdjointMode::kDiscrete;
  int pairs = 20;
  // taylor-test
  std::vector<double> steps{1e-1, 1e-2, 1e-3, 1e-4};
  // illposed, taylor-test, invert
  std::vector<std::string> targets;
  double delta = 0.2;
  std::vector<int> j{4, 8, 16, 32, 64};
  double t0 = -1.0;
  // svd
  std::string target;
  int n_sing = 30;
  ParameterBasis basis;
  // invert
  InversionConfig inversion;
  ParameterPoint truth;
  double noise = 0.0;  // relative to the clean data norm
  // convergence
  std::string study = "adjoint-gap";
  int levels = 4;
};

struct ExperimentConfig {
  json raw;
  fs::path base_dir;  // CSV paths are relative to this
  std::string config_sha256;
  ForwardProblem problem;
  ParameterPoint point;
  ExperimentOptions experiment;
  std::uint64_t seed = 0;
};

/// Parses and checks the schema; CSV fields are resolved relative to base_dir.
/// Schema errors are kConfig errors whose message starts with the field path.
ExperimentConfig parse_config(const json& j, const fs::path& base_dir);
ExperimentConfig load_config(const fs::path& path);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> passed;
  std::vector<std::string> failures;
};

/// Schema, admissibility and compatibility checks without any solve.
ValidationReport validate_config(const fs::path& path);

struct RunOptions {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct RunResult {
  fs::path manifest;
  json summary;
};

RunResult run(const RunOptions& options);

/// Full command line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace hyperinv::cli
