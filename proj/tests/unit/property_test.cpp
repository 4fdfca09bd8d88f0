#include <gtest/gtest.h>

#include <random>

#include "hyperinv/inversion.hpp"
#include "hyperinv/sensitivity.hpp"
#include "scenarios.hpp"

using namespace hyperinv;
using hyperinv::testing::make_scenario;

namespace {

Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> G;
  return Mat::NullaryExpr(r, c, [&] { return G(rng); });
}

// Random problem, size, horizon and coefficient scaling for one seed.
hyperinv::testing::Scenario random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto kind = static_cast<ProblemKind>(seed % 3);
  const int n = kind == ProblemKind::kElastic2d ? std::uniform_int_distribution(2, 4)(rng)
                                                : std::uniform_int_distribution(3, 12)(rng);
  const int N = std::uniform_int_distribution(5, 30)(rng);
  const double T = std::uniform_real_distribution(0.5, 2.0)(rng);
  auto s = make_scenario(kind, n, N, T);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  for (auto& [name, f] : s.point.fields) f.values *= scale(rng);
  return s;
}

// Two DOFs with a skew damping term, so the step matrices are not symmetric.
OperatorTimeline skew_timeline(const TimeGrid& g) {
  OperatorTimeline tl;
  tl.grid = g;
  tl.ndof = 2;
  tl.has_B = true;
  for (int n = 0; n <= g.N; ++n) {
    const double t = g.t(n);
    Mat C(2, 2), A(2, 2), B(2, 2);
    C << 1.0 + t, 0.1, 0.1, 2.0;
    A << 2.0, 0.5, 0.5, 3.0 + t;
    B << 0.5, 1.0 + t, -1.0, 0.2;
    tl.C.push_back(C.sparseView());
    tl.A.push_back(A.sparseView());
    tl.B.push_back(B.sparseView());
    tl.Q.push_back(SpMat(2, 2));
  }
  tl.dA = time_derivative(tl.A, g.dt());
  tl.dB = time_derivative(tl.B, g.dt());
  tl.dC = time_derivative(tl.C, g.dt());
  tl.dQ = time_derivative(tl.Q, g.dt());
  return tl;
}

}  // namespace

TEST(Property, DiscreteDotTestAcrossRandomProblems) {
  for (std::uint64_t seed = 0; seed < 9; ++seed) {
    const auto s = random_scenario(seed);
    const auto st = forward_map(s.problem, s.point);
    std::mt19937_64 rng(seed + 100);
    const auto spec = full_field(s.problem.disc, s.problem.grid);
    const auto h = hyperinv::testing::random_direction(s.point, rng);
    const auto v = hyperinv::testing::random_data_vector(spec, rng);
    EXPECT_LE(dot_test(s.problem, st, h, v, AdjointMode::kDiscrete).mismatch, 1e-10) << "seed " << seed;
  }
}

TEST(Property, ForwardSolveIsLinearInTheData) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto s = random_scenario(seed);
    const auto tl = assemble_operators(s.problem.disc, s.point);
    const int nd = tl.ndof, nodes = tl.grid.nodes();
    std::mt19937_64 rng(seed);
    const SourceTerm f1{random_mat(nodes, nd, rng)}, f2{random_mat(nodes, nd, rng)};
    const Vec a0 = random_mat(nd, 1, rng), a1 = random_mat(nd, 1, rng);
    const Vec b0 = random_mat(nd, 1, rng), b1 = random_mat(nd, 1, rng);
    const double x = 0.7, y = -1.3;
    const auto u1 = solve_forward(tl, f1, a0, a1).u;
    const auto u2 = solve_forward(tl, f2, b0, b1).u;
    const auto u = solve_forward(tl, SourceTerm{x * f1.values + y * f2.values}, x * a0 + y * b0,
                                 x * a1 + y * b1).u;
    EXPECT_LE((u - x * u1 - y * u2).cwiseAbs().maxCoeff(), 1e-11 * u.cwiseAbs().maxCoeff())
        << "seed " << seed;
  }
}

TEST(Property, NonsymmetricStepsSatisfyTheMidpointEquations) {
  const TimeGrid g{1.0, 16};
  const auto tl = skew_timeline(g);
  std::mt19937_64 rng(3);
  const SourceTerm f{random_mat(g.nodes(), 2, rng)};
  const Vec u0 = random_mat(2, 1, rng), m0 = random_mat(2, 1, rng);
  const MidpointCache cache(tl);
  const Mat half = 0.5 * (f.values.topRows(g.N) + f.values.bottomRows(g.N));
  const auto r = integrate_midpoint(cache, u0, m0, half, Mat());
  const double dt = g.dt();
  for (int n = 0; n < g.N; ++n) {
    const SpMat C = 0.5 * (tl.C[n] + tl.C[n + 1]);
    const SpMat B = 0.5 * (tl.B[n] + tl.B[n + 1]);
    const SpMat K = 0.5 * (tl.A[n] + tl.A[n + 1]);
    const Vec du = r.u.row(n + 1) - r.u.row(n);
    const Vec dm = r.m.row(n + 1) - r.m.row(n);
    const Vec m_mid = 0.5 * (r.m.row(n + 1) + r.m.row(n)).transpose();
    const Vec u_mid = 0.5 * (r.u.row(n + 1) + r.u.row(n)).transpose();
    EXPECT_LE((C * du / dt - m_mid).norm(), 1e-12);
    EXPECT_LE((dm / dt + B * du / dt + K * u_mid - half.row(n).transpose()).norm(), 1e-11);
  }
}

TEST(Property, NonsymmetricStepsTransposeExactly) {
  const TimeGrid g{1.0, 16};
  const MidpointCache cache(skew_timeline(g));
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    std::mt19937_64 rng(seed);
    const Mat F = random_mat(g.N, 2, rng), G = random_mat(g.N, 2, rng);
    const Mat r = random_mat(g.nodes(), 2, rng);
    const auto res = integrate_midpoint(cache, Vec::Zero(2), Vec::Zero(2), F, G);
    const auto adj = transpose_midpoint(cache, r);
    const double lhs = r.cwiseProduct(res.u).sum();
    const double rhs = adj.source.cwiseProduct(F).sum() + adj.offset.cwiseProduct(G).sum();
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
  }
}

TEST(Property, ProjectionIsIdempotentAndAdmissible) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> wild(-20.0, 20.0);
  const AdmissibleBounds b;
  for (auto kind : {ProblemKind::kWave1d, ProblemKind::kElastic2d, ProblemKind::kMaxwell1d}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto p = make_scenario(kind, 3, 4).point;
      for (auto& [name, f] : p.fields) {
        f.values = Mat::NullaryExpr(f.values.rows(), f.values.cols(), [&] { return wild(rng); });
      }
      project_admissible(p, b);
      EXPECT_NO_THROW(check_admissible(p, b));
      auto q = p;
      project_admissible(q, b);
      for (const auto& [name, f] : p.fields) EXPECT_EQ(f.values, q.field(name).values);
    }
  }
}

TEST(Property, NoiseHasTheRequestedLevel) {
  const auto s = random_scenario(4);
  const auto data = observe(forward_map(s.problem, s.point).traj, full_field(s.problem.disc, s.problem.grid));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> level(1e-4, 0.5);
  for (int trial = 0; trial < 8; ++trial) {
    const double l = level(rng);
    const auto noisy = add_noise(data, l, rng());
    EXPECT_NEAR(data_distance(noisy, data), l * data_norm(data), 1e-12 * data_norm(data));
  }
}
