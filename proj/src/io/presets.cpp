#include "hyperinv/presets.hpp"

#include <cmath>
#include <numbers>

namespace hyperinv {

TimeProfile parse_time_profile(const std::string& name) {
  if (name == "sin2") return TimeProfile::kSin2;
  if (name == "ramp") return TimeProfile::kRamp;
  if (name == "constant") return TimeProfile::kConstant;
  throw Error(ErrorCode::kConfig, "unknown time profile '" + name + "'");
}

double time_profile(TimeProfile profile, double t, double T) {
  switch (profile) {
    case TimeProfile::kSin2: {
      const double s = std::sin(std::numbers::pi * t / T);
      return s * s;
    }
    case TimeProfile::kRamp: return t / T;
    case TimeProfile::kConstant: return 1.0;
  }
  return 0.0;
}

namespace {

double gaussian(const std::array<double, 2>& x, const std::array<double, 2>& c, double w, int dim) {
  double r2 = (x[0] - c[0]) * (x[0] - c[0]);
  if (dim == 2) r2 += (x[1] - c[1]) * (x[1] - c[1]);
  return std::exp(-r2 / (2.0 * w * w));
}

}  // namespace

SourceTerm pulse_source(const Discretization& disc, const TimeGrid& grid,
                        std::array<double, 2> center, double width, double amplitude,
                        TimeProfile profile, std::array<double, 2> direction) {
  // load vector of the interpolated spatial pulse
  Vec g(disc.num_free());
  for (int i = 0; i < disc.num_free(); ++i) {
    const int global = disc.free_dofs[i];
    const int node = global / disc.components;
    const double weight = disc.components == 2 ? direction[global % 2] : 1.0;
    g(i) = amplitude * weight * gaussian(disc.nodes[node], center, width, disc.dim);
  }
  const Vec load = disc.M * g;
  SourceTerm f = SourceTerm::zeros(grid, disc.num_free());
  for (int n = 0; n <= grid.N; ++n) {
    f.values.row(n) = (time_profile(profile, grid.t(n), grid.T) * load).transpose();
  }
  return f;
}

ParameterField bump_field(const Discretization& disc, const TimeGrid& grid, double base,
                          double amplitude, std::array<double, 2> center, double width) {
  ParameterField f = ParameterField::constant(grid, disc.num_nodes(), base);
  for (int i = 0; i < disc.num_nodes(); ++i) {
    f.values.col(i).array() += amplitude * gaussian(disc.nodes[i], center, width, disc.dim);
  }
  return f;
}

ParameterField layered_field(const Discretization& disc, const TimeGrid& grid, double top,
                             double bottom, double interface, double transition) {
  ParameterField f = ParameterField::constant(grid, disc.num_nodes(), 0.0);
  for (int i = 0; i < disc.num_nodes(); ++i) {
    const double s = 0.5 * (1.0 + std::tanh((disc.nodes[i][0] - interface) / transition));
    f.values.col(i).setConstant(top + (bottom - top) * s);
  }
  return f;
}

}  // namespace hyperinv
