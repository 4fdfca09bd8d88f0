#include <gtest/gtest.h>

#include <cmath>

#include "hyperinv/sensitivity.hpp"
#include "scenarios.hpp"
#include "support.hpp"

using namespace hyperinv;
using namespace hyperinv::testing;

namespace {

const ProblemKind kKinds[] = {ProblemKind::kWave1d, ProblemKind::kElastic2d,
                              ProblemKind::kMaxwell1d};

int mesh_size(ProblemKind kind) { return kind == ProblemKind::kElastic2d ? 4 : 16; }

}  // namespace

TEST(LinearizedRhs, ZeroDirectionGivesZeroSource) {
  auto s = make_scenario(ProblemKind::kWave1d, 10, 20);
  const auto state = forward_map(s.problem, s.point);
  const auto dir = assemble_direction(s.problem.disc, s.point, s.point.zeros_like());
  for (Slot slot : {Slot::kA, Slot::kB, Slot::kC, Slot::kQ}) {
    EXPECT_EQ(linearized_rhs(slot, state.traj, dir).values.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(LinearizedRhs, DampingTermWithUnitVelocity) {
  const TimeGrid g{1.0, 8};
  const auto one = scalar_timeline(g, [](double) { return 1.0; }, [](double) { return 0.0; },
                                   [](double) { return 1.0; });
  Trajectory u;
  u.grid = g;
  u.u = Mat::Zero(g.nodes(), 1);
  u.du = Mat::Ones(g.nodes(), 1);
  const auto gb = linearized_rhs(Slot::kB, u, one);
  for (int n = 0; n <= g.N; ++n) EXPECT_DOUBLE_EQ(gb.values(n, 0), -1.0);
  try {
    linearized_rhs(Slot::kC, u, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientRegularity);
  }
}

TEST(LinearizedRhs, InertiaTermMatchesOscillatorAcceleration) {
  // u'' = -4 u with u(0) = 1: g_C = -Cbar u'' = 4 cos(2t) for Cbar = 1.
  std::vector<double> err;
  for (int N : {100, 200}) {
    const TimeGrid g{2.0, N};
    const auto tl = scalar_timeline(g, [](double) { return 1.0; }, [](double) { return 4.0; });
    const auto u = solve_forward(tl, SourceTerm::zeros(g, 1), Vec::Ones(1), Vec::Zero(1));
    const auto gc = linearized_rhs(Slot::kC, u, tl);
    double e = 0.0;
    for (int n = 0; n <= N; ++n) e = std::max(e, std::abs(gc.values(n, 0) - 4.0 * std::cos(2.0 * g.t(n))));
    err.push_back(e);
  }
  EXPECT_GE(order(err[0], err[1]), 1.9);
}

TEST(DerivativeApply, ZeroAndScaledDirections) {
  auto s = make_scenario(ProblemKind::kWave1d, 12, 30);
  const auto state = forward_map(s.problem, s.point);
  EXPECT_EQ(derivative_apply(s.problem, state, s.point.zeros_like()).u.cwiseAbs().maxCoeff(), 0.0);
  std::mt19937_64 rng(11);
  const auto h = random_direction(s.point, rng);
  auto h3 = h.zeros_like();
  h3.add_scaled(h, 3.0);
  const Mat d1 = derivative_apply(s.problem, state, h).u;
  const Mat d3 = derivative_apply(s.problem, state, h3).u;
  EXPECT_LE((d3 - 3.0 * d1).norm(), 1e-10 * d3.norm());
}

TEST(DerivativeApply, NodalAndDiscreteModesAgreeAsStepShrinks) {
  std::vector<double> gap;
  for (int N : {40, 80}) {
    auto s = make_scenario(ProblemKind::kWave1d, 16, N);
    const auto state = forward_map(s.problem, s.point);
    const auto h = smooth_direction(s.problem.disc, s.point, "");
    const Mat a = derivative_apply(s.problem, state, h).u;
    const Mat b = derivative_apply(s.problem, state, h, DerivativeMode::kNodal).u;
    gap.push_back((a - b).norm() / a.norm() / std::sqrt(double(N)));
  }
  EXPECT_GE(order(gap[0], gap[1]), 1.8);
}

TEST(DiscreteAdjoint, DotTestExactOnAllProblems) {
  for (auto kind : kKinds) {
    auto s = make_scenario(kind, mesh_size(kind), 40);
    const auto state = forward_map(s.problem, s.point);
    const auto spec = full_field(s.problem.disc, s.problem.grid);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 3; ++trial) {
      const auto h = random_direction(s.point, rng);
      const auto v = random_data_vector(spec, rng);
      EXPECT_LE(dot_test(s.problem, state, h, v, AdjointMode::kDiscrete).mismatch, 1e-10)
          << to_string(kind);
    }
  }
}

TEST(DiscreteAdjoint, DotTestWithNodeSubset) {
  auto s = make_scenario(ProblemKind::kWave1d, 16, 40);
  const auto state = forward_map(s.problem, s.point);
  const auto spec = node_subset(s.problem.disc, s.problem.grid, {2, 7, 8, 12});
  std::mt19937_64 rng(3);
  const auto h = random_direction(s.point, rng);
  const auto v = random_data_vector(spec, rng);
  EXPECT_LE(dot_test(s.problem, state, h, v, AdjointMode::kDiscrete).mismatch, 1e-10);
  EXPECT_THROW(adjoint_apply_continuous(s.problem, state, v), Error);
}

TEST(DiscreteAdjoint, ZeroDataAndMissingCache) {
  auto s = make_scenario(ProblemKind::kMaxwell1d, 10, 20);
  const auto state = forward_map(s.problem, s.point);
  const auto spec = full_field(s.problem.disc, s.problem.grid);
  const auto g = adjoint_apply_discrete(s.problem, state, DataVector::zeros(spec));
  EXPECT_EQ(g.norm(), 0.0);
  ForwardState empty;
  empty.point = s.point;
  try {
    adjoint_apply_discrete(s.problem, empty, DataVector::zeros(spec));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRequiresForwardSolve);
  }
  EXPECT_THROW(dot_test(s.problem, state, s.point.zeros_like(), DataVector::zeros(spec),
                        AdjointMode::kDiscrete),
               Error);
}

TEST(Taylor, SecondOrderRemainderPerField) {
  for (auto kind : kKinds) {
    auto s = make_scenario(kind, mesh_size(kind), 40);
    const auto state = forward_map(s.problem, s.point);
    const auto spec = full_field(s.problem.disc, s.problem.grid);
    for (const auto& name : field_names(kind)) {
      const auto h = smooth_direction(s.problem.disc, s.point, name);
      const auto res = taylor_test(s.problem, state, h, spec, {1e-1, 1e-2, 1e-3, 1e-4});
      for (double o : res.orders) EXPECT_GE(o, 1.9) << to_string(kind) << " " << name;
    }
  }
}

TEST(ContinuousAdjoint, GapShrinksAtSecondOrder) {
  std::vector<double> mism;
  for (int N : {40, 80, 160}) {
    auto s = make_scenario(ProblemKind::kWave1d, 16, N);
    const auto state = forward_map(s.problem, s.point);
    const auto spec = full_field(s.problem.disc, s.problem.grid);
    const auto h = smooth_direction(s.problem.disc, s.point, "");
    DataVector v = DataVector::zeros(spec);
    for (int n = 0; n <= N; ++n) {
      const double t = s.problem.grid.t(n);
      for (int i = 0; i < spec.ndof; ++i) {
        const double x = s.problem.disc.nodes[s.problem.disc.free_dofs[i]][0];
        v.values(n, i) = std::sin(3.0 * x) * std::sin(M_PI * t) * std::sin(M_PI * t);
      }
    }
    mism.push_back(dot_test(s.problem, state, h, v, AdjointMode::kContinuous).mismatch);
  }
  EXPECT_GE(order(mism[0], mism[1]), 1.8);
  EXPECT_GE(order(mism[1], mism[2]), 1.8);
}

TEST(ContinuousAdjoint, QuiescentRegionHasNoSensitivity) {
  // Source near x = 0.35 with unit speed: the region x > 0.9 is still at rest for t < 0.3.
  auto s = make_scenario(ProblemKind::kWave1d, 40, 80);
  s.problem.grid = TimeGrid{0.3, 30};
  s.point = ParameterPoint::constant(ProblemKind::kWave1d, s.problem.grid,
                                     s.problem.disc.num_nodes(), {{"a", 1.0}, {"rho", 1.0}});
  s.problem.source = pulse_source(s.problem.disc, s.problem.grid, {0.2, 0.0}, 0.03, 1.0,
                                  TimeProfile::kSin2);
  const auto state = forward_map(s.problem, s.point);
  auto h = s.point.zeros_like();
  for (int i = 0; i < s.problem.disc.num_nodes(); ++i) {
    if (s.problem.disc.nodes[i][0] > 0.9) h.field("rho").values.col(i).setOnes();
  }
  const auto spec = full_field(s.problem.disc, s.problem.grid);
  std::mt19937_64 rng(1);
  const auto v = random_data_vector(spec, rng);
  const auto dfh = observe(derivative_apply(s.problem, state, h), spec);
  const auto g = adjoint_apply_continuous(s.problem, state, v);
  EXPECT_LT(data_norm(dfh), 1e-12);
  EXPECT_LT(std::abs(g.dot(h)), 1e-12);
}

TEST(Gradient, MatchesFiniteDifferenceOfMisfit) {
  auto s = make_scenario(ProblemKind::kElastic2d, 4, 30);
  const auto spec = full_field(s.problem.disc, s.problem.grid);
  const auto state = forward_map(s.problem, s.point);
  std::mt19937_64 rng(9);
  DataVector d = observe(state.traj, spec);
  d.values *= 1.1;
  const auto residual = data_difference(observe(state.traj, spec), d);
  const auto grad = adjoint_apply_discrete(s.problem, state, residual);
  const auto h = smooth_direction(s.problem.disc, s.point, "");
  auto misfit = [&](double eps) {
    const auto st = forward_map(s.problem, s.point.plus_scaled(h, eps));
    const double r = data_distance(observe(st.traj, spec), d);
    return 0.5 * r * r;
  };
  const double eps = 1e-5;
  const double fd = (misfit(eps) - misfit(-eps)) / (2 * eps);
  EXPECT_NEAR(grad.dot(h), fd, 1e-4 * std::abs(fd));
}

TEST(Gradient, SelfAdjointDataGivesNonnegativeDensityGradient) {
  // Forward source and adjoint data both built from z(t) = sin^4(pi t / T) z0,
  // which is symmetric in time, so the adjoint state approximates u and the
  // density gradient approximates |u'|^2.
  const int n = 4, N = 80;
  const auto disc = build_grid(ProblemKind::kElastic2d, {n, n, 1.0, 1.0});
  const TimeGrid g{1.0, N};
  ForwardProblem prob{disc, g, SourceTerm::zeros(g, disc.num_free()), {}, {}, 2, {}};
  const auto p = ParameterPoint::constant(ProblemKind::kElastic2d, g, disc.num_nodes(),
                                          {{"lambda", 1.0}, {"mu", 1.0}, {"rho", 1.2}});
  const auto tl = assemble_operators(disc, p);
  Vec z0(disc.num_free());
  for (int i = 0; i < disc.num_free(); ++i) {
    const auto& x = disc.nodes[disc.free_dofs[i] / 2];
    z0(i) = std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]) * (i % 2 ? 0.5 : 1.0);
  }
  const Vec Mz = tl.C[0] * z0, Az = tl.A[0] * z0;
  Eigen::SimplicialLDLT<SpMat> mass(disc.M);
  const auto spec = full_field(disc, g);
  DataVector v = DataVector::zeros(spec);
  for (int k = 0; k <= N; ++k) {
    const double w = M_PI * g.t(k), sn = std::sin(w), cs = std::cos(w);
    const double s = std::pow(sn, 4);
    const double s2 = M_PI * M_PI * (12.0 * sn * sn * cs * cs - 4.0 * std::pow(sn, 4));
    prob.source.values.row(k) = (s2 * Mz + s * Az).transpose();
    v.values.row(k) = mass.solve(Vec(prob.source.values.row(k).transpose())).transpose();
  }
  const auto state = forward_map(prob, p);
  const auto grad = adjoint_apply_continuous(prob, state, v);
  const auto& gr = grad.field("rho").values;
  EXPECT_GT(gr.maxCoeff(), 0.0);
  EXPECT_GE(gr.minCoeff(), -1e-3 * gr.maxCoeff());
}
