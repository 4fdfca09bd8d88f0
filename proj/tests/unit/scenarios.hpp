#pragma once

#include <cmath>
#include <random>

#include "hyperinv/forward.hpp"
#include "hyperinv/presets.hpp"

namespace hyperinv::testing {

struct Scenario {
  ForwardProblem problem;
  ParameterPoint point;
};

// Smooth, time-dependent admissible coefficients with a sin^2 pulse source.
inline Scenario make_scenario(ProblemKind kind, int n, int N, double T = 1.0) {
  Scenario s;
  const GridSpec spec{n, kind == ProblemKind::kElastic2d ? n : 0, 1.0, 1.0};
  s.problem.disc = build_grid(kind, spec);
  s.problem.grid = TimeGrid{T, N};
  const auto& d = s.problem.disc;
  const auto& g = s.problem.grid;
  s.point = ParameterPoint::constant(kind, g, d.num_nodes(), {});
  for (int k = 0; k <= N; ++k) {
    const double t = g.t(k) / T;
    for (int i = 0; i < d.num_nodes(); ++i) {
      const double x = d.nodes[i][0], y = d.nodes[i][1];
      switch (kind) {
        case ProblemKind::kWave1d:
          s.point.field("a").values(k, i) = 1.0 + 0.2 * std::sin(3.0 * x) * (1.0 + 0.3 * t);
          s.point.field("rho").values(k, i) = 1.0 + 0.1 * x + 0.1 * t * t;
          s.point.field("b").values(k, i) = 0.1 + 0.05 * x * (1.0 - t);
          s.point.field("q").values(k, i) = 0.2 * t + 0.1 * x;
          break;
        case ProblemKind::kElastic2d:
          s.point.field("lambda").values(k, i) = 1.0 + 0.2 * x * y + 0.1 * t;
          s.point.field("mu").values(k, i) = 1.0 + 0.1 * std::sin(2.0 * x + y) * (1.0 + t);
          s.point.field("rho").values(k, i) = 1.0 + 0.1 * y + 0.05 * t;
          break;
        case ProblemKind::kMaxwell1d:
          s.point.field("mu").values(k, i) = 1.5 + 0.2 * std::cos(2.0 * x) * (1.0 + 0.5 * t);
          s.point.field("eps").values(k, i) = 1.0 + 0.2 * x * (1.0 + t);
          break;
      }
    }
  }
  s.problem.source = pulse_source(d, g, {0.35, 0.45}, 0.1, 10.0, TimeProfile::kSin2, {1.0, 0.5});
  return s;
}

inline ParameterPoint random_direction(const ParameterPoint& p, std::mt19937_64& rng) {
  std::normal_distribution<double> G;
  ParameterPoint h = p.zeros_like();
  for (auto& [name, f] : h.fields)
    for (int i = 0; i < f.values.size(); ++i) f.values(i) = G(rng);
  return h;
}

inline DataVector random_data_vector(const ObservationSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> G;
  DataVector v = DataVector::zeros(spec);
  for (int i = 0; i < v.values.size(); ++i) v.values(i) = G(rng);
  return v;
}

// Smooth direction in one field (or all fields when name is empty).
inline ParameterPoint smooth_direction(const Discretization& d, const ParameterPoint& p,
                                       const std::string& name) {
  ParameterPoint h = p.zeros_like();
  for (auto& [fname, f] : h.fields) {
    if (!name.empty() && fname != name) continue;
    for (int k = 0; k < f.values.rows(); ++k) {
      const double t = p.grid.t(k) / p.grid.T;
      for (int i = 0; i < d.num_nodes(); ++i) {
        const double x = d.nodes[i][0], y = d.nodes[i][1];
        f.values(k, i) = 0.3 * std::cos(2.0 * x + 1.0 * y + t) * (1.0 + t * t);
      }
    }
  }
  return h;
}

}  // namespace hyperinv::testing
