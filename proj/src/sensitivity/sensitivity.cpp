#include "hyperinv/sensitivity.hpp"

#include <cmath>

#include "hyperinv/parallel.hpp"

namespace hyperinv {

namespace {

SpMat half_node(const std::vector<SpMat>& samples, int n) {
  return 0.5 * (samples[n] + samples[n + 1]);
}

void require_cache(const ForwardState& state) {
  if (!state.timeline || !state.cache) {
    throw Error(ErrorCode::kRequiresForwardSolve, "no cached forward solve for this point");
  }
}

}  // namespace

SourceTerm linearized_rhs(Slot slot, const Trajectory& u, const OperatorTimeline& dir) {
  if (slot == Slot::kC && !u.has_ddu) {
    throw Error(ErrorCode::kInsufficientRegularity,
                "the C right-hand side needs the second time derivative of u");
  }
  const int nodes = static_cast<int>(u.u.rows());
  SourceTerm g = SourceTerm::zeros(u.grid, u.ndof());
  for (int n = 0; n < nodes; ++n) {
    Vec r;
    switch (slot) {
      case Slot::kA: r = -(dir.A[n] * u.u_at(n)); break;
      case Slot::kQ: r = -(dir.Q[n] * u.u_at(n)); break;
      case Slot::kB: r = -(dir.B[n] * u.du_at(n)); break;
      case Slot::kC:
        r = -(dir.dC[n] * u.du_at(n) + dir.C[n] * Vec(u.ddu.row(n).transpose()));
        break;
    }
    g.values.row(n) = r.transpose();
  }
  return g;
}

Trajectory derivative_apply(const ForwardProblem& problem, const ForwardState& state,
                            const ParameterPoint& h, DerivativeMode mode) {
  require_cache(state);
  const auto& tl = *state.timeline;
  const auto& cache = *state.cache;
  const auto& u = state.traj;
  const OperatorTimeline dir = assemble_direction(problem.disc, state.point, h);
  const int N = tl.grid.N;
  const int nd = tl.ndof;

  if (mode == DerivativeMode::kNodal) {
    SourceTerm g = linearized_rhs(Slot::kA, u, dir);
    g.values += linearized_rhs(Slot::kC, u, dir).values;
    if (tl.has_B) g.values += linearized_rhs(Slot::kB, u, dir).values;
    if (tl.has_Q) g.values += linearized_rhs(Slot::kQ, u, dir).values;
    Trajectory out = solve_forward(tl, cache, g, Vec::Zero(nd), Vec::Zero(nd));
    out.mode = "derivative-nodal";
    return out;
  }

  // Perturbing the half-node operators of the midpoint scheme moves the
  // source by -(Bbar_h vbar + Kbar_h ubar) and the momentum average by Cbar_h vbar.
  Mat F(N, nd), G(N, nd);
  for (int n = 0; n < N; ++n) {
    const Vec vbar = u.half_velocity.row(n).transpose();
    const Vec ubar = 0.5 * (u.u_at(n) + u.u_at(n + 1));
    Vec f = -(half_node(dir.A, n) * ubar);
    if (tl.has_Q) f -= half_node(dir.Q, n) * ubar;
    if (tl.has_B) f -= half_node(dir.B, n) * vbar;
    F.row(n) = f.transpose();
    G.row(n) = (half_node(dir.C, n) * vbar).transpose();
  }
  const MidpointResult res = integrate_midpoint(cache, Vec::Zero(nd), Vec::Zero(nd), F, G);
  Trajectory out;
  out.grid = tl.grid;
  out.u = res.u;
  out.half_velocity = res.vbar;
  out.du.resize(N + 1, nd);
  for (int n = 0; n <= N; ++n) {
    const Vec m = res.m.row(n).transpose() - dir.C[n] * u.du_at(n);
    out.du.row(n) = cache.solve_mass(n, m).transpose();
  }
  out.mode = "derivative";
  return out;
}

GradientFields adjoint_apply_continuous(const ForwardProblem& problem, const ForwardState& state,
                                        const DataVector& v) {
  require_cache(state);
  if (v.spec.kind != ObservationSpec::Kind::kFullField) {
    throw Error(ErrorCode::kUnsupportedObservation,
                "the continuous adjoint needs full-field data");
  }
  const auto& tl = *state.timeline;
  if (!(v.spec.grid == tl.grid) || v.spec.ndof != tl.ndof) {
    throw Error(ErrorCode::kSpecMismatch, "data do not match the forward solve");
  }
  const SourceTerm src{v.values * v.spec.gram};
  const Trajectory w = solve_backward(tl, src);
  const auto& u = state.traj;
  const Vec tau = trapezoid_weights(tl.grid);
  GradientFields grad = state.point.zeros_like();
  for (int n = 0; n <= tl.grid.N; ++n) {
    const Vec wn = w.u_at(n), dwn = w.du_at(n);
    const Vec un = u.u_at(n), dun = u.du_at(n);
    accumulate_direction_adjoint(problem.disc, state.point, Slot::kA, n, tau(n), -wn, un, grad);
    if (tl.has_Q) {
      accumulate_direction_adjoint(problem.disc, state.point, Slot::kQ, n, tau(n), -wn, un, grad);
    }
    if (tl.has_B) {
      accumulate_direction_adjoint(problem.disc, state.point, Slot::kB, n, tau(n), -wn, dun, grad);
    }
    accumulate_direction_adjoint(problem.disc, state.point, Slot::kC, n, tau(n), dwn, dun, grad);
  }
  return grad;
}

GradientFields adjoint_apply_discrete(const ForwardProblem& problem, const ForwardState& state,
                                      const DataVector& v) {
  require_cache(state);
  const auto& tl = *state.timeline;
  if (!(v.spec.grid == tl.grid) || v.spec.ndof != tl.ndof) {
    throw Error(ErrorCode::kSpecMismatch, "data do not match the forward solve");
  }
  const int N = tl.grid.N;
  const Mat weighted = v.values * v.spec.gram;
  Mat r = Mat::Zero(N + 1, tl.ndof);
  for (size_t j = 0; j < v.spec.indices.size(); ++j) {
    r.col(v.spec.indices[j]) = weighted.col(j).cwiseProduct(v.spec.time_weights);
  }
  const MidpointAdjoint adj = transpose_midpoint(*state.cache, r);
  const auto& u = state.traj;
  GradientFields grad = state.point.zeros_like();
  for (int n = 0; n < N; ++n) {
    const Vec fa = -adj.source.row(n).transpose();
    const Vec ga = adj.offset.row(n).transpose();
    const Vec vbar = u.half_velocity.row(n).transpose();
    const Vec ubar = 0.5 * (u.u_at(n) + u.u_at(n + 1));
    for (int m : {n, n + 1}) {
      accumulate_direction_adjoint(problem.disc, state.point, Slot::kA, m, 0.5, fa, ubar, grad);
      if (tl.has_Q) {
        accumulate_direction_adjoint(problem.disc, state.point, Slot::kQ, m, 0.5, fa, ubar, grad);
      }
      if (tl.has_B) {
        accumulate_direction_adjoint(problem.disc, state.point, Slot::kB, m, 0.5, fa, vbar, grad);
      }
      accumulate_direction_adjoint(problem.disc, state.point, Slot::kC, m, 0.5, ga, vbar, grad);
    }
  }
  return grad;
}

AdjointMode parse_adjoint_mode(const std::string& name) {
  if (name == "discrete") return AdjointMode::kDiscrete;
  if (name == "continuous") return AdjointMode::kContinuous;
  throw Error(ErrorCode::kConfig, "unknown adjoint mode '" + name + "'");
}

std::string to_string(AdjointMode mode) {
  return mode == AdjointMode::kDiscrete ? "discrete" : "continuous";
}

DotTestResult dot_test(const ForwardProblem& problem, const ForwardState& state,
                       const ParameterPoint& h, const DataVector& v, AdjointMode mode) {
  const DataVector dfh = observe(derivative_apply(problem, state, h), v.spec);
  const GradientFields g = mode == AdjointMode::kDiscrete
                               ? adjoint_apply_discrete(problem, state, v)
                               : adjoint_apply_continuous(problem, state, v);
  DotTestResult res;
  res.lhs = data_inner(dfh, v);
  res.rhs = g.dot(h);
  const double denom = data_norm(dfh) * data_norm(v) + g.norm() * h.norm();
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kDegenerateTest, "dot test with zero direction or zero data");
  }
  res.mismatch = std::abs(res.lhs - res.rhs) / denom;
  return res;
}

std::vector<DotTestResult> dot_test_batch(const ForwardProblem& problem, const ForwardState& state,
                                          const std::vector<ParameterPoint>& hs,
                                          const std::vector<DataVector>& vs, AdjointMode mode,
                                          int threads) {
  if (hs.size() != vs.size()) {
    throw Error(ErrorCode::kDirectionShape, "need as many directions as data vectors");
  }
  std::vector<DotTestResult> out(hs.size());
  parallel_for(static_cast<int>(hs.size()), threads,
               [&](int i) { out[i] = dot_test(problem, state, hs[i], vs[i], mode); });
  return out;
}

TaylorResult taylor_test(const ForwardProblem& problem, const ForwardState& state,
                         const ParameterPoint& h, const ObservationSpec& spec,
                         const std::vector<double>& steps) {
  const DataVector base = observe(state.traj, spec);
  const DataVector lin = observe(derivative_apply(problem, state, h), spec);
  TaylorResult res;
  res.steps = steps;
  for (double s : steps) {
    const auto pert = forward_map(problem, state.point.plus_scaled(h, s));
    DataVector rem = observe(pert.traj, spec);
    rem.values -= base.values + s * lin.values;
    res.remainders.push_back(data_norm(rem));
  }
  for (size_t i = 0; i + 1 < steps.size(); ++i) {
    res.orders.push_back(std::log(res.remainders[i] / res.remainders[i + 1]) /
                         std::log(steps[i] / steps[i + 1]));
  }
  return res;
}

}  // namespace hyperinv
