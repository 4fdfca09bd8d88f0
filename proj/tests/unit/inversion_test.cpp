#include <gtest/gtest.h>

#include "hyperinv/inversion.hpp"
#include "hyperinv/presets.hpp"

using namespace hyperinv;

namespace {

struct Instance {
  ForwardProblem problem;
  ParameterPoint x0;
  ParameterPoint truth;
  DataVector clean;
};

Instance rho_bump(int n = 20, int N = 80) {
  Instance s;
  s.problem.disc = build_grid(ProblemKind::kWave1d, GridSpec{n, 0, 1.0, 1.0});
  s.problem.grid = TimeGrid{1.0, N};
  s.problem.source = pulse_source(s.problem.disc, s.problem.grid, {0.3, 0.0}, 0.05, 50.0,
                                  TimeProfile::kSin2, {1.0, 0.0});
  s.x0 = ParameterPoint::constant(ProblemKind::kWave1d, s.problem.grid, s.problem.disc.num_nodes(),
                                  {{"a", 1.0}, {"b", 0.0}, {"q", 0.0}, {"rho", 1.0}});
  s.truth = s.x0;
  s.truth.field("rho") = bump_field(s.problem.disc, s.problem.grid, 1.0, 0.3, {0.6, 0.0}, 0.08);
  s.clean = observe(forward_map(s.problem, s.truth).traj, full_field(s.problem.disc, s.problem.grid));
  return s;
}

InversionConfig rho_config(int iters) {
  InversionConfig c;
  c.targets = {"rho"};
  c.max_iter = iters;
  return c;
}

double misfit(const Instance& s, const ParameterPoint& x, const DataVector& d) {
  const auto r = data_difference(observe(forward_map(s.problem, x).traj, d.spec), d);
  return 0.5 * data_inner(r, r);
}

}  // namespace

TEST(Landweber, ExactDataStopsImmediately) {
  const auto s = rho_bump();
  const auto d = observe(forward_map(s.problem, s.x0).traj, s.clean.spec);
  const auto r = landweber(s.problem, d, s.x0, rho_config(10));
  EXPECT_EQ(r.history.stop_index, 0);
  EXPECT_EQ(r.history.stop_reason, "discrepancy");
  EXPECT_EQ(r.history.records.front().residual, 0.0);
}

TEST(Landweber, NoiselessResidualDecreases) {
  const auto s = rho_bump();
  auto c = rho_config(20);
  c.discrepancy_stop = false;
  const auto r = landweber(s.problem, s.clean, s.x0, c);
  ASSERT_EQ(r.history.records.size(), 21u);
  for (size_t i = 1; i < r.history.records.size(); ++i) {
    EXPECT_LT(r.history.records[i].residual, r.history.records[i - 1].residual);
  }
  EXPECT_EQ(r.history.stop_reason, "max-iterations");
}

TEST(Landweber, OnlyTargetsMove) {
  const auto s = rho_bump();
  const auto r = landweber(s.problem, s.clean, s.x0, rho_config(3));
  for (const std::string name : {"a", "b", "q"}) {
    EXPECT_EQ((r.point.field(name).values - s.x0.field(name).values).norm(), 0.0);
  }
  EXPECT_GT((r.point.field("rho").values - s.x0.field("rho").values).norm(), 0.0);
}

TEST(Landweber, GradientIsDescentDirection) {
  const auto s = rho_bump();
  const auto state = forward_map(s.problem, s.x0);
  const auto r = data_difference(observe(state.traj, s.clean.spec), s.clean);
  auto g = adjoint_apply_discrete(s.problem, state, r);
  for (const std::string name : {"a", "b", "q"}) g.field(name).values.setZero();
  const double eps = 1e-2 / g.norm();
  // derivative of the misfit along -g
  const double fd = (misfit(s, s.x0.plus_scaled(g, -eps), s.clean) -
                     misfit(s, s.x0.plus_scaled(g, eps), s.clean)) / (2.0 * eps);
  EXPECT_LT(fd, 0.0);
  EXPECT_NEAR(fd, -g.dot(g), 1e-4 * g.dot(g));
}

TEST(Landweber, IteratesStayAdmissible) {
  auto s = rho_bump();
  s.truth.field("rho").values.array() -= 0.5;
  const auto d = observe(forward_map(s.problem, s.truth).traj, s.clean.spec);
  auto c = rho_config(15);
  c.bounds.c0 = 0.9;  // stricter than the forward problem's box
  c.snapshot_every = 1;
  c.discrepancy_stop = false;
  const auto r = landweber(s.problem, d, s.x0, c);
  EXPECT_EQ(r.history.snapshots.size(), 16u);
  for (const auto& x : r.history.snapshots) EXPECT_NO_THROW(check_admissible(x, c.bounds));
  EXPECT_LE(r.point.field("rho").values.minCoeff(), 0.9 + 1e-7);
}

TEST(Landweber, OversizedStepIsCaught) {
  const auto s = rho_bump();
  auto c = rho_config(40);
  c.linearized = true;
  c.discrepancy_stop = false;
  c.omega = 10.0 * landweber(s.problem, s.clean, s.x0, rho_config(0)).history.omega;
  try {
    landweber(s.problem, s.clean, s.x0, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStepSize);
  }
}

TEST(Landweber, ProjectionBoxMustSitInsideAdmissibleSet) {
  const auto s = rho_bump(8, 16);
  auto c = rho_config(5);
  c.bounds.c0 = 0.01;
  try {
    landweber(s.problem, s.clean, s.x0, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Landweber, StoppingIndexShrinksWithNoise) {
  const auto s = rho_bump();
  int prev = std::numeric_limits<int>::max();
  for (double level : {0.005, 0.01, 0.02, 0.05}) {
    const auto noisy = add_noise(s.clean, level, 3);
    auto c = rho_config(2000);
    c.noise_level = level * data_norm(s.clean);
    const auto r = landweber(s.problem, noisy, s.x0, c);
    EXPECT_EQ(r.history.stop_reason, "discrepancy");
    EXPECT_LE(r.history.stop_index, prev);
    prev = r.history.stop_index;
  }
}

TEST(Landweber, RejectsBadConfig) {
  const auto s = rho_bump(8, 16);
  auto c = rho_config(5);
  c.tau = 1.0;
  EXPECT_THROW(landweber(s.problem, s.clean, s.x0, c), Error);
  c = rho_config(5);
  c.targets = {"lambda"};
  EXPECT_THROW(landweber(s.problem, s.clean, s.x0, c), Error);
}

TEST(Cgne, ZeroRightHandSideGivesZeroUpdate) {
  const auto s = rho_bump();
  const auto d = observe(forward_map(s.problem, s.x0).traj, s.clean.spec);
  auto c = rho_config(10);
  c.method = InversionMethod::kCgne;
  const auto r = cgne(s.problem, d, s.x0, c);
  EXPECT_EQ((r.point.field("rho").values - s.x0.field("rho").values).norm(), 0.0);
  EXPECT_EQ(r.history.stop_index, 0);
}

TEST(Cgne, LinearizedResidualNonincreasing) {
  const auto s = rho_bump();
  auto c = rho_config(25);
  c.method = InversionMethod::kCgne;
  c.discrepancy_stop = false;
  const auto r = cgne(s.problem, s.clean, s.x0, c);
  for (size_t i = 1; i < r.history.records.size(); ++i) {
    EXPECT_LE(r.history.records[i].residual, r.history.records[i - 1].residual * (1.0 + 1e-12));
  }
}

TEST(Cgne, FewerIterationsThanLandweberOnLinearProblem) {
  const auto s = rho_bump();
  const auto state = forward_map(s.problem, s.x0);
  ParameterPoint h = s.x0.zeros_like();
  h.field("rho").values = s.truth.field("rho").values - s.x0.field("rho").values;
  DataVector d = observe(derivative_apply(s.problem, state, h), s.clean.spec);
  d.values += observe(state.traj, s.clean.spec).values;
  const double level = 0.01 * data_norm(d);
  d = add_noise(d, 0.01, 5);

  auto c = rho_config(5000);
  c.noise_level = level;
  c.linearized = true;
  const auto lw = landweber(s.problem, d, s.x0, c);
  c.method = InversionMethod::kCgne;
  const auto cg = cgne(s.problem, d, s.x0, c);
  EXPECT_EQ(lw.history.stop_reason, "discrepancy");
  EXPECT_EQ(cg.history.stop_reason, "discrepancy");
  EXPECT_LT(cg.history.stop_index, lw.history.stop_index);
}

TEST(Cgne, OuterRelinearizationReducesMisfit) {
  const auto s = rho_bump();
  auto c = rho_config(4);
  c.method = InversionMethod::kCgne;
  c.discrepancy_stop = false;
  const auto one = cgne(s.problem, s.clean, s.x0, c);
  c.outer = 3;
  const auto three = cgne(s.problem, s.clean, s.x0, c);
  EXPECT_LT(misfit(s, three.point, s.clean), misfit(s, one.point, s.clean));
  EXPECT_EQ(three.history.records.back().outer, 2);
}

TEST(AddNoise, ExactRelativeLevel) {
  const auto s = rho_bump(10, 20);
  for (double level : {0.01, 0.3}) {
    const auto noisy = add_noise(s.clean, level, 11);
    EXPECT_NEAR(data_distance(noisy, s.clean), level * data_norm(s.clean),
                1e-12 * level * data_norm(s.clean));
  }
}

TEST(AddNoise, ZeroLevelAndSeeds) {
  const auto s = rho_bump(10, 20);
  EXPECT_EQ((add_noise(s.clean, 0.0, 1).values - s.clean.values).norm(), 0.0);
  const auto a = add_noise(s.clean, 0.05, 9), b = add_noise(s.clean, 0.05, 9);
  EXPECT_TRUE(a.values == b.values);
  EXPECT_FALSE(a.values == add_noise(s.clean, 0.05, 10).values);
}
