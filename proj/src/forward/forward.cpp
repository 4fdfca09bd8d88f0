#include "hyperinv/forward.hpp"

#include <algorithm>
#include <cmath>

namespace hyperinv {

ForwardState forward_map(const ForwardProblem& problem, const ParameterPoint& point) {
  const int nd = problem.disc.num_free();
  const Vec u0 = problem.u0.size() ? problem.u0 : Vec::Zero(nd);
  const Vec u1 = problem.u1.size() ? problem.u1 : Vec::Zero(nd);
  if (!(point.grid == problem.grid)) {
    throw Error(ErrorCode::kDirectionShape, "parameter time grid differs from the problem's");
  }
  const auto compat = compatibility_check(problem.source, u0, u1, problem.k, problem.grid);
  if (!compat.pass) {
    std::string msg = "source not compatible at k=" + std::to_string(problem.k) + ":";
    for (const auto& f : compat.failures) msg += " " + f + ";";
    throw Error(ErrorCode::kPrecondition, msg);
  }
  ForwardState state;
  state.point = point;
  auto timeline = std::make_shared<OperatorTimeline>(
      assemble_operators(problem.disc, point, problem.bounds));
  auto cache = std::make_shared<MidpointCache>(*timeline);
  state.traj = solve_forward(*timeline, *cache, problem.source, u0, u1);
  state.timeline = std::move(timeline);
  state.cache = std::move(cache);
  return state;
}

ObservationSpec full_field(const Discretization& disc, const TimeGrid& grid) {
  ObservationSpec spec;
  spec.kind = ObservationSpec::Kind::kFullField;
  spec.grid = grid;
  spec.ndof = disc.num_free();
  spec.indices.resize(disc.num_free());
  for (int i = 0; i < disc.num_free(); ++i) spec.indices[i] = i;
  spec.time_weights = trapezoid_weights(grid);
  spec.gram = Mat(disc.M);
  return spec;
}

ObservationSpec node_subset(const Discretization& disc, const TimeGrid& grid,
                            std::vector<int> indices) {
  if (indices.empty()) throw Error(ErrorCode::kObservationSpec, "empty observation subset");
  for (int i : indices) {
    if (i < 0 || i >= disc.num_free()) {
      throw Error(ErrorCode::kObservationSpec,
                  "observed index " + std::to_string(i) + " outside 0.." +
                      std::to_string(disc.num_free() - 1));
    }
  }
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::kObservationSpec, "duplicate observed index");
  }
  ObservationSpec spec;
  spec.kind = ObservationSpec::Kind::kNodeSubset;
  spec.grid = grid;
  spec.ndof = disc.num_free();
  spec.indices = std::move(indices);
  spec.time_weights = trapezoid_weights(grid);
  const Mat M(disc.M);
  const int m = static_cast<int>(spec.indices.size());
  spec.gram.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) spec.gram(a, b) = M(spec.indices[a], spec.indices[b]);
  return spec;
}

DataVector observe(const Trajectory& traj, const ObservationSpec& spec) {
  if (!(traj.grid == spec.grid) || traj.ndof() != spec.ndof) {
    throw Error(ErrorCode::kObservationSpec, "observation spec does not match the trajectory");
  }
  DataVector d{spec, Mat(traj.u.rows(), static_cast<int>(spec.indices.size()))};
  for (size_t j = 0; j < spec.indices.size(); ++j) d.values.col(j) = traj.u.col(spec.indices[j]);
  return d;
}

namespace {

void require_same_spec(const DataVector& a, const DataVector& b) {
  if (!(a.spec == b.spec) || a.values.rows() != b.values.rows() ||
      a.values.cols() != b.values.cols()) {
    throw Error(ErrorCode::kSpecMismatch, "data vectors use different observation specs");
  }
}

}  // namespace

double data_inner(const DataVector& a, const DataVector& b) {
  require_same_spec(a, b);
  const Mat gb = b.values * a.spec.gram;  // gram is symmetric
  double sum = 0.0;
  for (int n = 0; n < a.values.rows(); ++n) sum += a.spec.time_weights(n) * a.values.row(n).dot(gb.row(n));
  return sum;
}

double data_norm(const DataVector& a) { return std::sqrt(std::max(0.0, data_inner(a, a))); }

DataVector data_difference(const DataVector& a, const DataVector& b) {
  require_same_spec(a, b);
  return DataVector{a.spec, a.values - b.values};
}

double data_distance(const DataVector& a, const DataVector& b) {
  return data_norm(data_difference(a, b));
}

}  // namespace hyperinv
