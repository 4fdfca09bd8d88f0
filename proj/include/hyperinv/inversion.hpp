#pragma once

// Iterative reconstruction of parameter fields from trajectory data.

#include <cstdint>
#include <string>
#include <vector>

#include "hyperinv/forward.hpp"
#include "hyperinv/sensitivity.hpp"

namespace hyperinv {

enum class InversionMethod { kLandweber, kCgne };

InversionMethod parse_inversion_method(const std::string& name);
std::string to_string(InversionMethod method);

struct InversionConfig {
  InversionMethod method = InversionMethod::kLandweber;
  double omega = 0.0;        // Landweber step; <= 0 picks 1/||dF(x0)||^2 by power iteration
  double tau = 1.5;          // discrepancy factor, > 1
  double noise_level = 0.0;  // absolute noise norm in the data inner product
  int max_iter = 100;        // per re-linearization for CGNE
  std::vector<std::string> targets;  // empty means every field
  AdmissibleBounds bounds;
  bool discrepancy_stop = true;  // false runs to max_iter regardless of the residual
  bool linearized = false;       // Landweber on dF(x0) instead of F
  int outer = 1;                 // CGNE re-linearizations
  int snapshot_every = 0;        // keep a copy of the iterate every k iterations, 0 = never
  int power_iterations = 12;
};

void validate(const InversionConfig& config, ProblemKind kind);

struct IterateRecord {
  int iteration = 0;
  int outer = 0;
  double residual = 0.0;       // ||F(x) - d|| (or linearized residual for CGNE inner steps)
  double gradient_norm = 0.0;  // Euclidean norm of the masked gradient
  bool accepted = true;
  int snapshot = -1;           // index into IterateHistory::snapshots, -1 if none
};

struct IterateHistory {
  std::vector<IterateRecord> records;
  std::vector<ParameterPoint> snapshots;
  std::string stop_reason;  // discrepancy | max-iterations | stagnation
  int stop_index = 0;
  double omega = 0.0;
};

struct InversionResult {
  IterateHistory history;
  ParameterPoint point;
};

/// Largest eigenvalue of dF(x)* dF(x) restricted to the targets.
double estimate_derivative_norm2(const ForwardProblem& problem, const ForwardState& state,
                                 const ObservationSpec& spec,
                                 const std::vector<std::string>& targets, int iterations);

InversionResult landweber(const ForwardProblem& problem, const DataVector& data,
                          const ParameterPoint& x0, const InversionConfig& config);

InversionResult cgne(const ForwardProblem& problem, const DataVector& data,
                     const ParameterPoint& x0, const InversionConfig& config);

InversionResult invert(const ForwardProblem& problem, const DataVector& data,
                       const ParameterPoint& x0, const InversionConfig& config);

/// Adds seeded Gaussian noise scaled so that data_distance(noisy, data) is
/// exactly level * data_norm(data).
DataVector add_noise(const DataVector& data, double level, std::uint64_t seed);

}  // namespace hyperinv
