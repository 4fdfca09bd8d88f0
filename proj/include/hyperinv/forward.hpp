#pragma once

// Forward operator F = S o P: parameter fields -> trajectory -> observed data.

#include <memory>
#include <vector>

#include "hyperinv/evolve.hpp"
#include "hyperinv/galerkin.hpp"

namespace hyperinv {

/// Everything F needs besides the parameter point.
struct ForwardProblem {
  Discretization disc;
  TimeGrid grid;
  SourceTerm source;
  Vec u0;  // empty means zero
  Vec u1;  // momentum (C u')(0); empty means zero
  int k = 2;
  AdmissibleBounds bounds;
};

/// Result of one forward solve; keeps the timeline and factorizations for
/// derivative and adjoint evaluations at the same point.
struct ForwardState {
  ParameterPoint point;
  std::shared_ptr<const OperatorTimeline> timeline;
  std::shared_ptr<const MidpointCache> cache;
  Trajectory traj;
};

ForwardState forward_map(const ForwardProblem& problem, const ParameterPoint& point);

struct ObservationSpec {
  enum class Kind { kFullField, kNodeSubset };
  Kind kind = Kind::kFullField;
  TimeGrid grid;
  int ndof = 0;              // free DOFs of the discretization
  std::vector<int> indices;  // observed free DOFs (all of them for full field)
  Vec time_weights;          // trapezoid weights
  Mat gram;                  // spatial inner product on observed DOFs

  bool operator==(const ObservationSpec& o) const {
    return kind == o.kind && grid == o.grid && ndof == o.ndof && indices == o.indices;
  }
};

ObservationSpec full_field(const Discretization& disc, const TimeGrid& grid);
/// Observation of a subset of free DOFs, with the matching principal block of M.
ObservationSpec node_subset(const Discretization& disc, const TimeGrid& grid,
                            std::vector<int> indices);

struct DataVector {
  ObservationSpec spec;
  Mat values;  // time node x observed DOF

  static DataVector zeros(const ObservationSpec& spec) {
    return DataVector{spec, Mat::Zero(spec.grid.nodes(), static_cast<int>(spec.indices.size()))};
  }
};

DataVector observe(const Trajectory& traj, const ObservationSpec& spec);

double data_inner(const DataVector& a, const DataVector& b);
double data_norm(const DataVector& a);
double data_distance(const DataVector& a, const DataVector& b);
DataVector data_difference(const DataVector& a, const DataVector& b);

}  // namespace hyperinv
