#include <gtest/gtest.h>

#include <cmath>

#include "hyperinv/illposed.hpp"
#include "scenarios.hpp"

using namespace hyperinv;
using hyperinv::testing::make_scenario;

namespace {

double closed_form_bump(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

double closed_form_bump_d1(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  const double u = 1.0 - t * t;
  return closed_form_bump(t) * (-2.0 * t / (u * u));
}

}  // namespace

TEST(MotherBump, JetMatchesClosedForm) {
  for (double t : {-0.9, -0.3, 0.0, 0.2, 0.7}) {
    const auto jet = raw_bump_jet(t, 4);
    EXPECT_NEAR(jet[0], closed_form_bump(t), 1e-15);
    EXPECT_NEAR(jet[1], closed_form_bump_d1(t), 1e-13);
    const double h = 1e-4;
    const double fd2 = (closed_form_bump_d1(t + h) - closed_form_bump_d1(t - h)) / (2 * h);
    EXPECT_NEAR(2.0 * jet[2], fd2, 1e-6 * (1.0 + std::abs(fd2)));
  }
  for (double v : raw_bump_jet(1.0, 3)) EXPECT_EQ(v, 0.0);
}

TEST(MotherBump, NormalizedSupIsOne) {
  for (int r : {0, 1, 3}) {
    const MotherBump psi(r);
    double mx = 0.0;
    for (double s : psi.sup_norms()) mx = std::max(mx, s);
    EXPECT_NEAR(mx, 1.0, 1e-12);
  }
  EXPECT_NEAR(MotherBump(0).scale(), std::exp(-1.0), 1e-12);
}

TEST(BumpSequence, SupportAndPeak) {
  const TimeGrid grid{1.0, 4096};
  const auto seq = bump_sequence(3, 0.5, grid, {4, 16, 64});
  for (size_t i = 0; i < seq.j.size(); ++i) {
    const int j = seq.j[i];
    for (int n = 0; n <= grid.N; ++n) {
      if (std::abs(j * (grid.t(n) - 0.5)) >= 1.0) EXPECT_EQ(seq.samples[i](n), 0.0);
    }
    EXPECT_NEAR(seq.samples[i](grid.N / 2), std::pow(j, -3.0) * seq.psi_at_zero, 1e-18);
  }
}

TEST(BumpSequence, NormSandwich) {
  const auto seq = bump_sequence(3, 0.5, TimeGrid{1.0, 4096}, {4, 8, 16, 32, 64});
  for (double v : seq.norms) {
    EXPECT_GE(v, seq.gamma);
    EXPECT_LE(v, 1.05);
  }
}

TEST(BumpSequence, CoarseGridRefuses) {
  try {
    bump_sequence(3, 0.5, TimeGrid{1.0, 256}, {64});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kResolution);
  }
}

TEST(BumpSequence, SupportMustStayInside) {
  try {
    bump_sequence(3, 0.25, TimeGrid{1.0, 4096}, {4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
}

TEST(RankOne, UnitNormAndOrthogonality) {
  const auto disc = build_grid(ProblemKind::kWave1d, GridSpec{40, 0, 1.0, 1.0});
  const auto x = rank_one_sequence(disc, RankOneSequence::Kind::kX, {1, 2, 5, 20});
  for (int k : x.k) {
    EXPECT_NEAR(x.operator_norm(k, disc), 1.0, 1e-10);
    const Vec fk = x.phi.col(k - 1);
    EXPECT_LT((x.apply(k, fk, disc) - fk).norm(), 1e-10);
    for (int m : {1, 3, 7}) {
      if (m != k) EXPECT_LT(x.apply(k, x.phi.col(m - 1), disc).norm(), 1e-10);
    }
  }
  const auto y = rank_one_sequence(disc, RankOneSequence::Kind::kY, {1, 4, 12});
  for (int k : y.k) EXPECT_NEAR(y.operator_norm(k, disc), 1.0, 1e-10);
}

TEST(RankOne, SmoothVectorCoefficientsDecay) {
  // x(1-x) has sine coefficients proportional to 1/k^3 on odd k
  const auto disc = build_grid(ProblemKind::kWave1d, GridSpec{80, 0, 1.0, 1.0});
  const auto x = rank_one_sequence(disc, RankOneSequence::Kind::kX, {1, 3, 5, 7, 9});
  Vec v(disc.num_free());
  for (int i = 0; i < disc.num_free(); ++i) {
    const double s = disc.nodes[disc.free_dofs[i]][0];
    v(i) = s * (1.0 - s);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int k : x.k) {
    const Vec xv = x.apply(k, v, disc);
    const double c = std::sqrt(xv.dot(disc.M * xv));
    EXPECT_LT(c, prev);
    prev = c;
  }
}

TEST(RankOne, OutOfRangeIndex) {
  const auto disc = build_grid(ProblemKind::kWave1d, GridSpec{10, 0, 1.0, 1.0});
  try {
    rank_one_sequence(disc, RankOneSequence::Kind::kX, {10});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpectral);
  }
}

TEST(Perturb, MaxwellPermeabilityIsReciprocal) {
  auto s = make_scenario(ProblemKind::kMaxwell1d, 10, 20);
  Vec alpha = Vec::LinSpaced(21, 0.0, 0.1);
  const auto p = perturb_with_bump(s.point, "mu", 0.4, alpha);
  const Mat lhs = p.field("mu").values.array().inverse() - s.point.field("mu").values.array().inverse();
  for (int n = 0; n <= 20; ++n) {
    EXPECT_LT((lhs.row(n).array() - 0.2 * alpha(n)).abs().maxCoeff(), 1e-13);
  }
  const auto q = perturb_with_bump(s.point, "eps", 0.4, alpha);
  EXPECT_NEAR((q.field("eps").values - s.point.field("eps").values)(20, 3), 0.02, 1e-15);
}

TEST(Illposed, ZeroDeltaGivesZeroDistances) {
  auto s = make_scenario(ProblemKind::kWave1d, 10, 4096);
  const auto r = illposed_experiment(s.problem, s.point, "a", 0.0, {4, 8});
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.param_distance, 0.0);
    EXPECT_EQ(row.output_distance, 0.0);
  }
}

TEST(Illposed, ParameterGapStaysWhileOutputVanishes) {
  auto s = make_scenario(ProblemKind::kWave1d, 16, 4096);
  const auto r = illposed_experiment(s.problem, s.point, "rho", 0.2, {4, 8, 16, 32, 64});
  EXPECT_TRUE(r.param_bounded_below);
  EXPECT_TRUE(r.output_decreasing);
  EXPECT_LT(r.output_ratio, 0.1);
}

TEST(Illposed, LeavingTheAdmissibleSetIsReported) {
  auto s = make_scenario(ProblemKind::kMaxwell1d, 10, 4096);
  try {
    illposed_experiment(s.problem, s.point, "mu", 1e7, {4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSlack);
  }
}

TEST(SvdProbe, OrderedAndFullRank) {
  auto s = make_scenario(ProblemKind::kWave1d, 40, 160);
  const auto r = svd_probe(s.problem, s.point, "a", 30);
  EXPECT_EQ(r.parameter_dofs, 30);
  for (int i = 1; i < r.singular_values.size(); ++i) {
    EXPECT_LT(r.singular_values(i), r.singular_values(i - 1));
  }
  EXPECT_GT(r.numerical_rank, 20);
  EXPECT_NEAR(r.decay_ratios.front(), 1.0, 1e-15);
}

TEST(SvdProbe, TooManyDirections) {
  auto s = make_scenario(ProblemKind::kWave1d, 10, 20);
  ParameterBasis b;
  b.px = 400;
  try {
    svd_probe(s.problem, s.point, "a", 5, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }
}
