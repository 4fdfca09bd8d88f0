#include "hyperinv/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace hyperinv {

InversionMethod parse_inversion_method(const std::string& name) {
  if (name == "landweber") return InversionMethod::kLandweber;
  if (name == "cgne") return InversionMethod::kCgne;
  throw Error(ErrorCode::kConfig, "unknown inversion method '" + name + "'");
}

std::string to_string(InversionMethod method) {
  return method == InversionMethod::kLandweber ? "landweber" : "cgne";
}

void validate(const InversionConfig& c, ProblemKind kind) {
  if (!(c.tau > 1.0)) throw Error(ErrorCode::kConfig, "discrepancy factor tau must exceed 1");
  if (c.noise_level < 0.0) throw Error(ErrorCode::kConfig, "noise level must be nonnegative");
  if (c.max_iter < 0) throw Error(ErrorCode::kConfig, "max_iter must be nonnegative");
  if (c.outer < 1) throw Error(ErrorCode::kConfig, "outer count must be at least 1");
  if (!std::isfinite(c.omega)) throw Error(ErrorCode::kConfig, "step size must be finite");
  const auto& names = field_names(kind);
  for (const auto& t : c.targets) {
    if (std::find(names.begin(), names.end(), t) == names.end()) {
      throw Error(ErrorCode::kConfig, "no field '" + t + "' in " + std::string(to_string(kind)));
    }
  }
}

namespace {

void mask(ParameterPoint& g, const std::vector<std::string>& targets) {
  if (targets.empty()) return;
  for (auto& [name, f] : g.fields) {
    if (std::find(targets.begin(), targets.end(), name) == targets.end()) f.values.setZero();
  }
}

DataVector apply_derivative(const ForwardProblem& problem, const ForwardState& state,
                            const ParameterPoint& h, const ObservationSpec& spec) {
  return observe(derivative_apply(problem, state, h), spec);
}

GradientFields apply_adjoint(const ForwardProblem& problem, const ForwardState& state,
                             const DataVector& r, const std::vector<std::string>& targets) {
  GradientFields g = adjoint_apply_discrete(problem, state, r);
  mask(g, targets);
  return g;
}

struct Recorder {
  const InversionConfig& config;
  IterateHistory& history;

  void add(int it, int outer, double residual, double gnorm, bool accepted,
           const ParameterPoint& x) {
    IterateRecord rec{it, outer, residual, gnorm, accepted, -1};
    if (config.snapshot_every > 0 && it % config.snapshot_every == 0) {
      rec.snapshot = static_cast<int>(history.snapshots.size());
      history.snapshots.push_back(x);
    }
    history.records.push_back(rec);
  }
};

// the projection box has to sit inside the admissible set of the forward problem
void check_bounds(const AdmissibleBounds& box, const AdmissibleBounds& d) {
  const bool inside = box.eps_hat >= d.eps_hat && box.a0 >= d.a0 && box.c0 >= d.c0 &&
                      box.rho0 >= d.rho0 && box.alpha0 <= d.alpha0 &&
                      box.elastic_mu_min >= d.elastic_mu_min && box.mu0 >= d.mu0 &&
                      box.mu1 <= d.mu1 && box.eps0 >= d.eps0;
  if (!inside) {
    throw Error(ErrorCode::kConfig, "projection bounds reach outside the admissible set");
  }
}

void check_data(const ForwardProblem& problem, const DataVector& data) {
  if (!(data.spec.grid == problem.grid) || data.spec.ndof != problem.disc.num_free()) {
    throw Error(ErrorCode::kSpecMismatch, "data do not match the forward problem");
  }
}

}  // namespace

double estimate_derivative_norm2(const ForwardProblem& problem, const ForwardState& state,
                                 const ObservationSpec& spec,
                                 const std::vector<std::string>& targets, int iterations) {
  ParameterPoint h = state.point.zeros_like();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.5, 1.5);
  for (auto& [name, f] : h.fields) {
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = uni(rng);
  }
  mask(h, targets);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double hn = h.norm();
    if (hn == 0.0) return 0.0;
    for (auto& [name, f] : h.fields) f.values /= hn;
    ParameterPoint g = apply_adjoint(problem, state, apply_derivative(problem, state, h, spec), targets);
    lambda = g.dot(h);
    h = std::move(g);
  }
  return lambda;
}

InversionResult landweber(const ForwardProblem& problem, const DataVector& data,
                          const ParameterPoint& x0, const InversionConfig& config) {
  validate(config, x0.problem);
  check_data(problem, data);
  check_bounds(config.bounds, problem.bounds);
  check_admissible(x0, config.bounds);
  const ObservationSpec& spec = data.spec;

  InversionResult out;
  IterateHistory& hist = out.history;
  Recorder rec{config, hist};

  ForwardState state = forward_map(problem, x0);
  // linearized mode iterates on h with the derivative frozen at x0
  const ForwardState base = state;
  const DataVector rhs = data_difference(data, observe(base.traj, spec));
  ParameterPoint h = x0.zeros_like();

  double omega = config.omega;
  if (!(omega > 0.0)) {
    const double n2 = estimate_derivative_norm2(problem, base, spec, config.targets,
                                                config.power_iterations);
    if (!(n2 > 0.0)) throw Error(ErrorCode::kStepSize, "derivative vanishes on the targets");
    omega = 1.0 / n2;
  }
  hist.omega = omega;

  ParameterPoint x = x0;
  DataVector r = data_difference(observe(state.traj, spec), data);
  double res = data_norm(r);
  const double level = config.tau * config.noise_level;
  int growth = 0;
  for (int it = 0;; ++it) {
    const bool stop_now = config.discrepancy_stop && res <= level;
    GradientFields g;
    double gnorm = 0.0;
    if (!stop_now && it < config.max_iter) {
      g = config.linearized ? apply_adjoint(problem, base, r, config.targets)
                            : apply_adjoint(problem, state, r, config.targets);
      gnorm = g.norm();
    }
    rec.add(it, 0, res, gnorm, true, x);
    if (stop_now) {
      hist.stop_reason = "discrepancy";
      hist.stop_index = it;
      break;
    }
    if (it >= config.max_iter) {
      hist.stop_reason = "max-iterations";
      hist.stop_index = it;
      break;
    }
    double next;
    if (config.linearized) {
      h.add_scaled(g, -omega);
      r = apply_derivative(problem, base, h, spec);
      r.values -= rhs.values;
      x = x0.plus_scaled(h, 1.0);
      next = data_norm(r);
    } else {
      x.add_scaled(g, -omega);
      project_admissible(x, config.bounds);
      state = forward_map(problem, x);
      r = data_difference(observe(state.traj, spec), data);
      next = data_norm(r);
    }
    growth = next > res ? growth + 1 : 0;
    res = next;
    if (growth >= 5) {
      std::ostringstream os;
      os << "residual grew for 5 consecutive iterations (omega = " << omega << ", iteration "
         << it + 1 << ")";
      throw Error(ErrorCode::kStepSize, os.str());
    }
  }
  if (config.linearized) project_admissible(x, config.bounds);
  out.point = std::move(x);
  return out;
}

InversionResult cgne(const ForwardProblem& problem, const DataVector& data,
                     const ParameterPoint& x0, const InversionConfig& config) {
  validate(config, x0.problem);
  check_data(problem, data);
  check_bounds(config.bounds, problem.bounds);
  check_admissible(x0, config.bounds);
  const ObservationSpec& spec = data.spec;
  const double level = config.tau * config.noise_level;

  InversionResult out;
  IterateHistory& hist = out.history;
  Recorder rec{config, hist};
  ParameterPoint x = x0;
  int total = 0;
  for (int outer = 0; outer < config.outer; ++outer) {
    const ForwardState state = forward_map(problem, x);
    // CGLS on dF(x) h = data - F(x)
    DataVector r = data_difference(data, observe(state.traj, spec));
    ParameterPoint h = x.zeros_like();
    ParameterPoint s = apply_adjoint(problem, state, r, config.targets);
    ParameterPoint p = s;
    double gamma = s.dot(s);
    double res = data_norm(r);
    bool done = false;
    for (int it = 0;; ++it) {
      rec.add(total, outer, res, std::sqrt(gamma), true, x.plus_scaled(h, 1.0));
      if (config.discrepancy_stop && res <= level) {
        hist.stop_reason = "discrepancy";
        done = true;
        break;
      }
      if (it >= config.max_iter) {
        hist.stop_reason = "max-iterations";
        done = outer + 1 == config.outer;
        break;
      }
      if (gamma == 0.0) {
        hist.stop_reason = "stagnation";
        break;
      }
      const DataVector q = apply_derivative(problem, state, p, spec);
      const double qq = data_inner(q, q);
      if (!(qq > 0.0)) {
        throw Error(ErrorCode::kCgBreakdown, "search direction has zero curvature at inner step " +
                                                 std::to_string(it));
      }
      const double alpha = gamma / qq;
      h.add_scaled(p, alpha);
      r.values -= alpha * q.values;
      s = apply_adjoint(problem, state, r, config.targets);
      const double gnew = s.dot(s);
      p = s.plus_scaled(p, gnew / gamma);
      gamma = gnew;
      res = data_norm(r);
      ++total;
    }
    x.add_scaled(h, 1.0);
    project_admissible(x, config.bounds);
    if (done) break;
  }
  hist.stop_index = total;
  out.point = std::move(x);
  return out;
}

InversionResult invert(const ForwardProblem& problem, const DataVector& data,
                       const ParameterPoint& x0, const InversionConfig& config) {
  return config.method == InversionMethod::kLandweber ? landweber(problem, data, x0, config)
                                                      : cgne(problem, data, x0, config);
}

DataVector add_noise(const DataVector& data, double level, std::uint64_t seed) {
  if (level < 0.0) throw Error(ErrorCode::kPrecondition, "noise level must be nonnegative");
  DataVector out = data;
  const double target = level * data_norm(data);
  if (target == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DataVector e = DataVector::zeros(data.spec);
  for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values.data()[i] = normal(rng);
  out.values += (target / data_norm(e)) * e.values;
  return out;
}

}  // namespace hyperinv
