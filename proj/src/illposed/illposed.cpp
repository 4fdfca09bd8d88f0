#include "hyperinv/illposed.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hyperinv/parallel.hpp"
#include "hyperinv/sensitivity.hpp"

namespace hyperinv {

namespace {

double factorial(int i) {
  double f = 1.0;
  for (int k = 2; k <= i; ++k) f *= k;
  return f;
}

}  // namespace

std::vector<double> raw_bump_jet(double t, int order) {
  std::vector<double> e(order + 1, 0.0);
  if (std::abs(t) >= 1.0) return e;
  // u(t + s) = (1 - t^2) - 2 t s - s^2
  std::vector<double> u(order + 1, 0.0), inv(order + 1, 0.0), g(order + 1, 0.0);
  u[0] = 1.0 - t * t;
  if (order >= 1) u[1] = -2.0 * t;
  if (order >= 2) u[2] = -1.0;
  inv[0] = 1.0 / u[0];
  for (int k = 1; k <= order; ++k) {
    double s = 0.0;
    for (int m = 1; m <= std::min(k, 2); ++m) s += u[m] * inv[k - m];
    inv[k] = -s / u[0];
  }
  for (int k = 0; k <= order; ++k) g[k] = -inv[k];
  e[0] = std::exp(g[0]);
  for (int k = 1; k <= order; ++k) {
    double s = 0.0;
    for (int m = 1; m <= k; ++m) s += m * g[m] * e[k - m];
    e[k] = s / k;
  }
  return e;
}

MotherBump::MotherBump(int r) : r_(r) {
  if (r < 0) throw Error(ErrorCode::kPrecondition, "bump order must be nonnegative");
  std::vector<double> raw(r + 1, 0.0);
  const int samples = 200000;
  for (int s = 1; s < samples; ++s) {
    const double t = -1.0 + 2.0 * s / samples;
    const auto jet = raw_bump_jet(t, r);
    for (int i = 0; i <= r; ++i) raw[i] = std::max(raw[i], std::abs(jet[i]) * factorial(i));
  }
  scale_ = *std::max_element(raw.begin(), raw.end());
  for (double v : raw) sups_.push_back(v / scale_);
}

double MotherBump::value(double t) const { return derivative(t, 0); }

double MotherBump::derivative(double t, int i) const {
  return raw_bump_jet(t, i)[i] * factorial(i) / scale_;
}

BumpSequence bump_sequence(int r, double t0, const TimeGrid& grid,
                           const std::vector<int>& j_list) {
  if (r < 1) throw Error(ErrorCode::kPrecondition, "bump smoothness order must be >= 1");
  if (!(t0 > 0.0 && t0 < grid.T)) {
    throw Error(ErrorCode::kPrecondition, "bump centre must lie inside (0, T)");
  }
  const MotherBump psi(r);
  BumpSequence seq;
  seq.r = r;
  seq.t0 = t0;
  seq.grid = grid;
  seq.gamma_continuous = psi.sup_norms()[r];
  seq.gamma = 0.5 * seq.gamma_continuous;
  seq.psi_at_zero = psi.value(0.0);
  const double jmin = std::max(1.0 / t0, 1.0 / (grid.T - t0));
  for (int j : j_list) {
    if (!(j > jmin)) {
      std::ostringstream os;
      os << "index j=" << j << " must exceed " << jmin << " so the support stays inside (0, T)";
      throw Error(ErrorCode::kPrecondition, os.str());
    }
    Vec a(grid.nodes());
    int inside = 0;
    for (int n = 0; n <= grid.N; ++n) {
      const double s = j * (grid.t(n) - t0);
      a(n) = std::pow(static_cast<double>(j), -r) * psi.value(s);
      if (std::abs(s) < 1.0) ++inside;
    }
    if (inside < 8) {
      throw Error(ErrorCode::kResolution, "only " + std::to_string(inside) +
                                              " time nodes inside the support of alpha_" +
                                              std::to_string(j) + " (need 8)");
    }
    const double norm = parameter_norm(ParameterField{grid, a}, r - 1);
    if (norm < seq.gamma) {
      std::ostringstream os;
      os << "time grid too coarse for alpha_" << j << ": surrogate norm " << norm
         << " below the lower bound " << seq.gamma;
      throw Error(ErrorCode::kResolution, os.str());
    }
    seq.j.push_back(j);
    seq.samples.push_back(std::move(a));
    seq.norms.push_back(norm);
  }
  return seq;
}

Vec RankOneSequence::apply(int k, const Vec& v, const Discretization& disc) const {
  if (kind == Kind::kX) {
    const Vec f = phi.col(k - 1);
    return v.dot(disc.M * f) * f;
  }
  return v.dot(disc.K_V * psi.col(k - 1)) * psi.col(0);
}

Mat RankOneSequence::matrix(int k, const Discretization& disc) const {
  if (kind == Kind::kX) {
    const Vec f = phi.col(k - 1);
    return f * (Mat(disc.M) * f).transpose();
  }
  return psi.col(0) * (Mat(disc.K_V) * psi.col(k - 1)).transpose();
}

double RankOneSequence::operator_norm(int k, const Discretization& disc) const {
  const Mat G = kind == Kind::kX ? Mat(disc.M) : Mat(disc.K_V);
  const Mat T = matrix(k, disc);
  const Mat TGT = T.transpose() * G * T;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(0.5 * (TGT + TGT.transpose()), G,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::kSpectral, "norm eigensolver failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

RankOneSequence rank_one_sequence(const Discretization& disc, RankOneSequence::Kind kind,
                                  const std::vector<int>& k_list) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Mat(disc.K_V), Mat(disc.M));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kSpectral, "generalized eigensolver for (K_V, M) failed");
  }
  RankOneSequence seq;
  seq.kind = kind;
  seq.eigenvalues = es.eigenvalues();
  seq.phi = es.eigenvectors();
  seq.psi = seq.phi * seq.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
  for (int k : k_list) {
    if (k < 1 || k > disc.num_free()) {
      throw Error(ErrorCode::kSpectral, "index " + std::to_string(k) + " outside the spectrum 1.." +
                                            std::to_string(disc.num_free()));
    }
    seq.k.push_back(k);
  }
  return seq;
}

ParameterPoint perturb_with_bump(const ParameterPoint& point, const std::string& target,
                                 double delta, const Vec& alpha) {
  ParameterPoint out = point;
  Mat& v = out.field(target).values;
  if (alpha.size() != v.rows()) {
    throw Error(ErrorCode::kDirectionShape, "bump samples do not match the time grid");
  }
  const bool reciprocal = point.problem == ProblemKind::kMaxwell1d && target == "mu";
  for (int n = 0; n < v.rows(); ++n) {
    const double a = 0.5 * delta * alpha(n);
    if (reciprocal) {
      v.row(n) = (v.row(n).array().inverse() + a).inverse().matrix();
    } else {
      v.row(n).array() += a;
    }
  }
  return out;
}

namespace {

Trajectory difference(const Trajectory& a, const Trajectory& b) {
  Trajectory d;
  d.grid = a.grid;
  d.u = a.u - b.u;
  d.du = a.du - b.du;
  d.has_ddu = a.has_ddu && b.has_ddu;
  if (d.has_ddu) d.ddu = a.ddu - b.ddu;
  return d;
}

}  // namespace

IllposedResult illposed_experiment(const ForwardProblem& problem, const ParameterPoint& point,
                                   const std::string& target, double delta,
                                   const std::vector<int>& j_list, double t0, int threads) {
  const auto& names = field_names(point.problem);
  if (std::find(names.begin(), names.end(), target) == names.end()) {
    throw Error(ErrorCode::kConfig, "no field '" + target + "' in " +
                                        std::string(to_string(point.problem)));
  }
  if (delta < 0.0) throw Error(ErrorCode::kPrecondition, "delta must be nonnegative");
  const int r = problem.k + 1;
  const int level = std::max(problem.k - 1, 0);
  const double center = t0 > 0.0 ? t0 : 0.5 * problem.grid.T;
  const BumpSequence seq = bump_sequence(r, center, problem.grid, j_list);
  const Trajectory base = forward_map(problem, point).traj;

  IllposedResult res;
  res.target = target;
  res.delta = delta;
  res.gamma = seq.gamma;
  res.rows.resize(seq.j.size());
  parallel_for(static_cast<int>(seq.j.size()), threads, [&](int idx) {
    const ParameterPoint pj = perturb_with_bump(point, target, delta, seq.samples[idx]);
    try {
      check_admissible(pj, problem.bounds);
    } catch (const Error& e) {
      throw Error(ErrorCode::kSlack, std::string("perturbed point leaves the admissible set, "
                                                 "use a smaller delta (") + e.what() + ")");
    }
    const Trajectory sj = forward_map(problem, pj).traj;
    const ParameterField diff{point.grid,
                              pj.field(target).values - point.field(target).values};
    res.rows[idx] = IllposedRow{seq.j[idx], parameter_norm(diff, r - 1),
                                y_norm(difference(sj, base), problem.disc, level)};
  });

  res.param_bounded_below = true;
  res.output_decreasing = true;
  for (size_t i = 0; i < res.rows.size(); ++i) {
    if (res.rows[i].param_distance < 0.5 * delta * res.gamma) res.param_bounded_below = false;
    if (i > 0 && !(res.rows[i].output_distance < res.rows[i - 1].output_distance)) {
      res.output_decreasing = false;
    }
  }
  if (!res.rows.empty() && res.rows.front().output_distance > 0.0) {
    res.output_ratio = res.rows.back().output_distance / res.rows.front().output_distance;
  }
  return res;
}

namespace {

double hat(double x, double node, double width) {
  return std::max(0.0, 1.0 - std::abs(x - node) / width);
}

}  // namespace

SvdProbeResult svd_probe(const ForwardProblem& problem, const ParameterPoint& point,
                         const std::string& target, int n_sing, const ParameterBasis& basis,
                         int threads) {
  const auto& disc = problem.disc;
  const bool two_d = disc.dim == 2;
  const int nx = basis.px + 1;
  const int ny = two_d ? basis.py + 1 : 1;
  const int ndirs = nx * ny;
  if (basis.px < 1 || (two_d && basis.py < 1)) {
    throw Error(ErrorCode::kPrecondition, "parameter grid needs at least one cell per axis");
  }
  if (ndirs > 400) {
    throw Error(ErrorCode::kTooLarge, std::to_string(ndirs) + " parameter DOFs exceed 400");
  }
  point.field(target);  // validates the name

  const ForwardState state = forward_map(problem, point);
  const ObservationSpec spec = full_field(disc, problem.grid);
  const Eigen::LLT<Mat> chol(spec.gram);
  const Mat Lt = chol.matrixU();
  const int nodes = problem.grid.nodes();
  const int nd = disc.num_free();
  Mat J(static_cast<Eigen::Index>(nodes) * nd, ndirs);

  const double wx = disc.spec.lx / basis.px;
  const double wy = two_d ? disc.spec.ly / basis.py : 1.0;
  parallel_for(ndirs, threads, [&](int c) {
    const int ax = c % nx, ay = c / nx;
    ParameterPoint h = point.zeros_like();
    auto& f = h.field(target).values;
    for (int i = 0; i < disc.num_nodes(); ++i) {
      double b = hat(disc.nodes[i][0], ax * wx, wx);
      if (two_d) b *= hat(disc.nodes[i][1], ay * wy, wy);
      f.col(i).setConstant(b);
    }
    const DataVector d = observe(derivative_apply(problem, state, h), spec);
    for (int n = 0; n < nodes; ++n) {
      J.block(static_cast<Eigen::Index>(n) * nd, c, nd, 1) =
          std::sqrt(spec.time_weights(n)) * (Lt * d.values.row(n).transpose());
    }
  });

  Eigen::BDCSVD<Mat> svd(J);
  const Vec& s = svd.singularValues();
  SvdProbeResult res;
  res.parameter_dofs = ndirs;
  const int count = std::min<int>(n_sing, static_cast<int>(s.size()));
  res.singular_values = s.head(count);
  for (int i = 0; i < count; ++i) res.decay_ratios.push_back(s(0) > 0 ? s(i) / s(0) : 0.0);
  for (int i = 0; i < s.size(); ++i) {
    if (s(0) > 0 && s(i) / s(0) > 1e-8) ++res.numerical_rank;
  }
  return res;
}

}  // namespace hyperinv
