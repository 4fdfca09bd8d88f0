#include "hyperinv/evolve.hpp"

#include <algorithm>
#include <cmath>

namespace hyperinv {

namespace {

bool same_matrix(const SpMat& a, const SpMat& b) { return (a - b).norm() == 0.0; }

bool is_symmetric(const SpMat& s) {
  return (s - SpMat(s.transpose())).norm() <= 1e-14 * s.norm();
}

}  // namespace

MidpointCache::MidpointCache(const OperatorTimeline& tl) : grid_(tl.grid), ndof_(tl.ndof) {
  const double dt = grid_.dt();
  SpMat prev;
  for (int n = 0; n < grid_.N; ++n) {
    SpMat C = 0.5 * (tl.C[n] + tl.C[n + 1]);
    SpMat K = 0.5 * (tl.K(n) + tl.K(n + 1));
    SpMat S = C + (0.25 * dt * dt) * K;
    if (tl.has_B) S += (0.5 * dt) * SpMat(0.5 * (tl.B[n] + tl.B[n + 1]));
    S.makeCompressed();
    if (n > 0 && same_matrix(S, prev)) {
      step_.push_back(step_.back());
    } else {
      auto f = std::make_shared<StepFactor>();
      bool ok;
      if (is_symmetric(S)) {
        f->ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(S);
        ok = f->ldlt->info() == Eigen::Success;
      } else {
        f->lu = std::make_unique<Eigen::SparseLU<SpMat>>();
        f->lu->compute(S);
        ok = f->lu->info() == Eigen::Success;
      }
      if (!ok) {
        throw Error(ErrorCode::kSolverFailure,
                    "singular midpoint system at step " + std::to_string(n));
      }
      step_.push_back(std::move(f));
      prev = std::move(S);
    }
    C_half_.push_back(std::move(C));
    K_half_.push_back(std::move(K));
  }
  for (int n = 0; n <= grid_.N; ++n) {
    if (n > 0 && same_matrix(tl.C[n], tl.C[n - 1])) {
      mass_ldlt_.push_back(mass_ldlt_.back());
      continue;
    }
    auto ldlt = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(tl.C[n]);
    if (ldlt->info() != Eigen::Success) {
      throw Error(ErrorCode::kSolverFailure, "singular C at time node " + std::to_string(n));
    }
    mass_ldlt_.push_back(std::move(ldlt));
  }
}

Vec MidpointCache::solve_step(int n, const Vec& rhs) const {
  const auto& f = *step_[n];
  return f.ldlt ? Vec(f.ldlt->solve(rhs)) : Vec(f.lu->solve(rhs));
}

Vec MidpointCache::solve_step_transpose(int n, const Vec& rhs) const {
  const auto& f = *step_[n];
  return f.ldlt ? Vec(f.ldlt->solve(rhs)) : Vec(f.lu->transpose().solve(rhs));
}

Vec MidpointCache::solve_mass(int n, const Vec& rhs) const { return mass_ldlt_[n]->solve(rhs); }

MidpointResult integrate_midpoint(const MidpointCache& cache, const Vec& u0, const Vec& m0,
                                  const Mat& half_source, const Mat& offset) {
  const int N = cache.steps();
  const int nd = cache.ndof();
  const double dt = cache.grid().dt();
  MidpointResult out{Mat(N + 1, nd), Mat(N + 1, nd), Mat(N, nd)};
  out.u.row(0) = u0.transpose();
  out.m.row(0) = m0.transpose();
  for (int n = 0; n < N; ++n) {
    const Vec un = out.u.row(n).transpose();
    const Vec mn = out.m.row(n).transpose();
    Vec rhs = mn - (0.5 * dt) * (cache.K_half(n) * un);
    if (half_source.size() > 0) rhs += (0.5 * dt) * half_source.row(n).transpose();
    if (offset.size() > 0) rhs -= offset.row(n).transpose();
    const Vec v = cache.solve_step(n, rhs);
    Vec mid = cache.C_half(n) * v;
    if (offset.size() > 0) mid += offset.row(n).transpose();
    out.vbar.row(n) = v.transpose();
    out.u.row(n + 1) = (un + dt * v).transpose();
    out.m.row(n + 1) = (2.0 * mid - mn).transpose();
  }
  return out;
}

MidpointAdjoint transpose_midpoint(const MidpointCache& cache, const Mat& r) {
  const int N = cache.steps();
  const int nd = cache.ndof();
  const double dt = cache.grid().dt();
  MidpointAdjoint adj{Mat::Zero(N, nd), Mat::Zero(N, nd)};
  Vec ua = r.row(N).transpose();
  Vec ma = Vec::Zero(nd);
  for (int n = N - 1; n >= 0; --n) {
    const Vec va = dt * ua + 2.0 * (cache.C_half(n).transpose() * ma);
    Vec ga = 2.0 * ma;
    Vec un_a = ua;
    Vec mn_a = -ma;
    const Vec y = cache.solve_step_transpose(n, va);
    mn_a += y;
    adj.source.row(n) = (0.5 * dt * y).transpose();
    un_a -= (0.5 * dt) * (cache.K_half(n).transpose() * y);
    ga -= y;
    adj.offset.row(n) = ga.transpose();
    un_a += r.row(n).transpose();
    ua = std::move(un_a);
    ma = std::move(mn_a);
  }
  return adj;
}

Trajectory solve_forward(const OperatorTimeline& timeline, const SourceTerm& f, const Vec& u0,
                         const Vec& u1) {
  const MidpointCache cache(timeline);
  return solve_forward(timeline, cache, f, u0, u1);
}

Trajectory solve_forward(const OperatorTimeline& tl, const MidpointCache& cache,
                         const SourceTerm& f, const Vec& u0, const Vec& u1) {
  const int N = tl.grid.N;
  const int nd = tl.ndof;
  if (f.values.rows() != N + 1 || f.values.cols() != nd || u0.size() != nd || u1.size() != nd) {
    throw Error(ErrorCode::kDirectionShape, "source or initial data do not match the timeline");
  }
  const Mat half = 0.5 * (f.values.topRows(N) + f.values.bottomRows(N));
  MidpointResult res = integrate_midpoint(cache, u0, u1, half, Mat());

  Trajectory traj;
  traj.grid = tl.grid;
  traj.u = std::move(res.u);
  traj.half_velocity = std::move(res.vbar);
  traj.du.resize(N + 1, nd);
  traj.ddu.resize(N + 1, nd);
  for (int n = 0; n <= N; ++n) {
    const Vec du = cache.solve_mass(n, res.m.row(n).transpose());
    traj.du.row(n) = du.transpose();
    Vec resid = f.values.row(n).transpose() - tl.K(n) * traj.u_at(n) - tl.dC[n] * du;
    if (tl.has_B) resid -= tl.B[n] * du;
    traj.ddu.row(n) = cache.solve_mass(n, resid).transpose();
  }
  traj.has_ddu = true;
  return traj;
}

OperatorTimeline reversed_adjoint_timeline(const OperatorTimeline& tl) {
  const int nodes = tl.grid.nodes();
  OperatorTimeline rev;
  rev.grid = tl.grid;
  rev.ndof = tl.ndof;
  rev.has_B = tl.has_B;
  rev.has_Q = tl.has_B || tl.has_Q;
  for (int s = 0; s < nodes; ++s) {
    const int n = nodes - 1 - s;
    rev.A.push_back(tl.A[n]);
    rev.C.push_back(tl.C[n]);
    rev.B.push_back(SpMat(tl.B[n].transpose()));
    rev.Q.push_back(SpMat(SpMat(tl.Q[n].transpose()) - SpMat(tl.dB[n].transpose())));
  }
  const double dt = tl.grid.dt();
  rev.dA = time_derivative(rev.A, dt);
  rev.dB = time_derivative(rev.B, dt);
  rev.dC = time_derivative(rev.C, dt);
  rev.dQ = time_derivative(rev.Q, dt);
  return rev;
}

Trajectory solve_backward(const OperatorTimeline& timeline, const SourceTerm& v) {
  const OperatorTimeline rev = reversed_adjoint_timeline(timeline);
  const SourceTerm vr{v.values.colwise().reverse()};
  const Vec zero = Vec::Zero(timeline.ndof);
  Trajectory w = solve_forward(rev, vr, zero, zero);
  Trajectory out;
  out.grid = w.grid;
  out.u = w.u.colwise().reverse();
  out.du = -w.du.colwise().reverse();
  out.ddu = w.ddu.colwise().reverse();
  out.half_velocity = -w.half_velocity.colwise().reverse();
  out.has_ddu = true;
  out.mode = "backward";
  return out;
}

CompatibilityReport compatibility_check(const SourceTerm& f, const Vec& u0, const Vec& u1, int k,
                                        const TimeGrid& grid, const OperatorTimeline* timeline) {
  CompatibilityReport rep;
  rep.k = k;
  if (k < 0 || k > 2) {
    rep.pass = false;
    rep.failures.push_back("k must be 0, 1 or 2 (got " + std::to_string(k) + ")");
    return rep;
  }
  if (k >= 1) {
    if (u0.size() > 0 && u0.cwiseAbs().maxCoeff() > 0.0) {
      rep.pass = false;
      rep.failures.push_back("u0 != 0 (max |u0| = " + std::to_string(u0.cwiseAbs().maxCoeff()) + ")");
    }
    if (u1.size() > 0 && u1.cwiseAbs().maxCoeff() > 0.0) {
      rep.pass = false;
      rep.failures.push_back("u1 != 0 (max |u1| = " + std::to_string(u1.cwiseAbs().maxCoeff()) + ")");
    }
  }
  const double fnorm = f.values.size() > 0 ? f.values.cwiseAbs().maxCoeff() : 0.0;
  Mat d = f.values;
  for (int j = 0; j <= k - 2; ++j) {
    if (j > 0) d = time_difference(d, grid.dt());
    const double trace = d.size() > 0 ? d.row(0).cwiseAbs().maxCoeff() : 0.0;
    rep.traces.push_back(trace);
    if (trace > 1e-8 * fnorm) {
      rep.pass = false;
      const std::string name = j == 0 ? "f" : "f^(" + std::to_string(j) + ")";
      rep.failures.push_back(name + "(0) != 0 (max |" + name + "(0)| = " + std::to_string(trace) + ")");
    }
  }
  if (k == 2 && timeline != nullptr && f.values.rows() > 0) {
    const auto& tl = *timeline;
    Vec rhs = f.values.row(0).transpose() - tl.dC[0] * u1 - tl.K(0) * u0;
    if (tl.has_B) rhs -= tl.B[0] * u1;
    Eigen::SimplicialLDLT<SpMat> c0(tl.C[0]);
    rep.u2 = c0.solve(rhs);
  }
  return rep;
}

EnergyReport energy_monitor(const Trajectory& traj, const OperatorTimeline& tl,
                            const SourceTerm* f) {
  EnergyReport rep;
  const int nodes = static_cast<int>(traj.u.rows());
  for (int n = 0; n < nodes; ++n) {
    const Vec u = traj.u_at(n);
    const Vec du = traj.du_at(n);
    rep.energy.push_back(0.5 * (du.dot(tl.C[n] * du) + u.dot(tl.A[n] * u)));
  }
  for (int n = 0; n + 1 < nodes; ++n) {
    const double e0 = rep.energy[n], e1 = rep.energy[n + 1];
    const double rel = e0 > 0.0 ? (e1 - e0) / e0 : (e1 > 0.0 ? 1.0 : 0.0);
    rep.max_rel_increase = std::max(rep.max_rel_increase, rel);
    if (e1 > e0) rep.nonincreasing = false;
    if (std::abs(rel) > 1e-10) rep.conserved = false;
  }
  if (f != nullptr) {
    const Vec w = trapezoid_weights(traj.grid);
    double fn2 = 0.0;
    for (int n = 0; n < f->values.rows(); ++n) fn2 += w(n) * f->values.row(n).squaredNorm();
    const double emax = *std::max_element(rep.energy.begin(), rep.energy.end());
    rep.lambda_hat = fn2 > 0.0 ? emax / fn2 : 0.0;
  }
  return rep;
}

namespace {

double max_norm(const Mat& rows, const SpMat& gram) {
  double best = 0.0;
  for (int n = 0; n < rows.rows(); ++n) {
    const Vec x = rows.row(n).transpose();
    best = std::max(best, std::sqrt(std::max(0.0, x.dot(gram * x))));
  }
  return best;
}

}  // namespace

double y_norm(const Trajectory& traj, const Discretization& disc, int k) {
  if (k < 0 || k > 1) throw Error(ErrorCode::kResolution, "y_norm supports k in {0, 1}");
  double value = max_norm(traj.u, disc.K_V) + max_norm(traj.du, disc.M);
  if (k == 1) {
    if (!traj.has_ddu) {
      throw Error(ErrorCode::kInsufficientRegularity, "y_norm(k=1) needs second derivatives");
    }
    value += max_norm(traj.du, disc.K_V) + max_norm(traj.ddu, disc.M);
  }
  return value;
}

}  // namespace hyperinv
