#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "herding/bounds.hpp"
#include "oracles.hpp"

using namespace herding;

namespace
{

const double kRoot2 = std::sqrt(2.0);

using Kind = AssumptionViolation::Kind;

}  // namespace

TEST(LambdaS, Examples)
{
  EXPECT_EQ(lambda_s(0.0, 1.0, 1.0), 0.0);
  EXPECT_NEAR(lambda_s(0.5, 1.0, 1.0), kRoot2 * 0.5 + (3.0 + kRoot2) * 0.5, 1e-12);
  EXPECT_NEAR(lambda_s(0.5, 1.0, 1.0), 2.9142, 1e-4);
  EXPECT_NEAR(lambda_s(0.5, 1.0, 1e4), kRoot2 * 0.5, 1e-9);
}

TEST(LambdaD, Examples)
{
  EXPECT_EQ(lambda_d(0.0, 0.5), 0.0);
  EXPECT_NEAR(lambda_d(0.1, 0.5), 3.5314, 1e-4);
}

TEST(LambdaM, Examples)
{
  EXPECT_NEAR(lambda_m(1, 123.0, 1.0, 0.1, 1.0, 1.0, 0.5), kRoot2 + lambda_d(0.1, 0.5), 1e-12);
  EXPECT_NEAR(lambda_m(2, 0.5, 1.0, 0.1, 1.0, 1.0, 0.5), 11.391, 1e-3);
  EXPECT_EQ(lambda_m(3, 0.0, 0.0, 0.0, 1.0, 1.0, 0.5), 0.0);
  EXPECT_THROW(lambda_m(0, 0.5, 1.0, 0.1, 1.0, 1.0, 0.5), std::invalid_argument);
}

TEST(FMax, Examples)
{
  SheepParams p{0.5, 1.0, 0.1, 1.0, Vec2::Zero()};
  DistanceBounds db{1.0, 3.0, 0.5, 4.0, 5.0, 2.0};
  EXPECT_NEAR(f_max_pair(p, db), 1.5556, 1e-4);
  EXPECT_NEAR(f_max_bound(1, p, db), p.k_g * db.m_g + p.k_d / (db.l_d * db.l_d), 1e-12);
  EXPECT_NEAR(f_max_bound(2, p, db), f_max_pair(p, db) + 4.0 + 2.0 * 0.4, 1e-12);
  SheepParams zero{0.0, 0.0, 0.0, 1.0, Vec2::Zero()};
  EXPECT_EQ(f_max_bound(4, zero, db), 0.0);
}

TEST(BLower, Examples)
{
  SheepParams zero{0.0, 0.0, 0.0, 0.4, Vec2::Zero()};
  DistanceBounds db{0.05, 6.0, 0.02, 6.0, 6.0, 0.0};
  CbfGains g = CbfGains::from_poles(1.0, 1.0);
  EXPECT_EQ(b_lower_bound(3, zero, g, db), 0.0);

  SheepParams p{0.5, 1.0, 0.1, 0.4, Vec2::Zero()};
  db.u_d_max = 2.0;
  const double lm1 = kRoot2 * p.k_g + lambda_d(p.k_d, db.l_d);
  const double expected = -(g.alpha + lm1) * db.m_p * (p.k_g * db.m_g + p.k_d / (db.l_d * db.l_d));
  EXPECT_NEAR(b_lower_bound(1, p, g, db), expected, 1e-9 * std::abs(expected));
}

TEST(BLower, ComposesTheSubBounds)
{
  // 2v2 suite parameters, recomposed by hand from the four pieces.
  SheepParams p{0.5, 1.0, 0.1, 0.4, Vec2::Zero()};
  DistanceBounds db{0.05, 6.0, 0.02, 6.0, 6.0, 2.0};
  const auto g = CbfGains::from_poles(1.5, 2.0);
  const double n = 2.0;
  const double ls = kRoot2 * 0.5 + (3.0 + kRoot2) * 0.5 * std::pow(0.4 / 0.05, 3);
  const double ld = (3.0 + kRoot2) * 0.1 / std::pow(0.02, 3);
  const double lm = (n - 1.0) * ls + kRoot2 * 1.0 + n * ld;
  const auto pair = [&](double r) { return 0.5 * r + 0.5 * std::pow(0.4, 3) / (r * r); };
  const double fmax = (n - 1.0) * std::max(pair(0.05), pair(6.0)) + 1.0 * 6.0 + n * 0.1 / (0.02 * 0.02);
  const double gamma = -(g.alpha + lm + (n - 1.0) * ls) * 6.0;
  const double expected = gamma * fmax - (n - 1.0) * ld * 6.0 * 2.0;
  const double got = b_lower_bound(2, p, g, db);
  EXPECT_TRUE(std::isfinite(got));
  EXPECT_LT(got, 0.0);
  EXPECT_NEAR(got, expected, 1e-12 * std::abs(expected));
}

TEST(Bounds, MonotoneInLowerDistances)
{
  SheepParams p{0.5, 1.0, 0.1, 0.4, Vec2::Zero()};
  const auto g = CbfGains::from_poles(1.0, 1.0);
  double prev_ls = 0.0;
  double prev_ld = 0.0;
  double prev_lm = 0.0;
  double prev_b = 0.0;
  for (double l = 1.0; l > 0.01; l *= 0.8) {
    const DistanceBounds db{l, 6.0, l, 6.0, 6.0, 2.0};
    EXPECT_GE(lambda_s(p.k_s, p.r_s, l), prev_ls);
    EXPECT_GE(lambda_d(p.k_d, l), prev_ld);
    EXPECT_GE(lambda_m(3, p.k_s, p.k_g, p.k_d, p.r_s, l, l), prev_lm);
    EXPECT_LE(b_lower_bound(3, p, g, db), prev_b);
    prev_ls = lambda_s(p.k_s, p.r_s, l);
    prev_ld = lambda_d(p.k_d, l);
    prev_lm = lambda_m(3, p.k_s, p.k_g, p.k_d, p.r_s, l, l);
    prev_b = b_lower_bound(3, p, g, db);
  }
}

TEST(FeasibilityReport, UsesLargestTeamAndLargestAlpha)
{
  SheepParams p{0.5, 1.0, 0.1, 0.4, Vec2::Zero()};
  DistanceBounds db{0.05, 6.0, 0.02, 6.0, 6.0, 2.0};
  GainTable gains(2, 1);
  gains(0, 0) = CbfGains::from_poles(1.0, 1.0);
  gains(1, 0) = CbfGains::from_poles(3.0, 1.0);
  const auto rep = feasibility_report(2, 3, p, gains, db);
  EXPECT_EQ(rep.lambda_m, lambda_m(3, p.k_s, p.k_g, p.k_d, p.r_s, db.l_s, db.l_d));
  EXPECT_EQ(rep.b_lower, b_lower_bound(3, p, gains(1, 0), db));
  EXPECT_FALSE(rep.feasible_certificate);  // unequal teams
  EXPECT_TRUE(feasibility_report(2, 2, p, gains, db).feasible_certificate);
  db.l_s = 0.0;
  EXPECT_THROW(feasibility_report(2, 2, p, gains, db), std::invalid_argument);
}

TEST(Monitor, Examples)
{
  WorldState w;
  w.sheep = {Vec2(1, 0), Vec2(1.5, 0)};
  w.dogs = {Vec2(2, 1)};
  SheepParams p;
  const std::vector<Zone> zones{Zone{}};
  DistanceBounds db{0.1, 6.0, 0.05, 6.0, 6.0, 2.0};
  EXPECT_TRUE(monitor_assumptions(w, p, zones, db).empty());

  w.sheep[1] = Vec2(1.05, 0);
  auto v = monitor_assumptions(w, p, zones, db);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Kind::sheep_too_close);
  EXPECT_EQ(v[0].a, 0u);
  EXPECT_EQ(v[0].b, 1u);
  EXPECT_EQ(v[0].describe(), "sheep 0/1 closer than l_s");

  w.sheep = {Vec2(1, 0), Vec2(1.5, 0)};
  db.m_p = 1.2;
  v = monitor_assumptions(w, p, zones, db);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Kind::zone_too_far);
  EXPECT_EQ(v[0].a, 1u);
}

TEST(Monitor, EveryClause)
{
  WorldState w;
  w.sheep = {Vec2(1, 0), Vec2(9, 0)};
  w.dogs = {Vec2(1.01, 0)};
  SheepParams p;
  const std::vector<Zone> zones{Zone{}};
  DistanceBounds db{0.1, 5.0, 0.05, 6.0, 6.0, 2.0};
  const auto v = monitor_assumptions(w, p, zones, db);
  std::vector<Kind> kinds;
  for (const auto & x : v) {
    kinds.push_back(x.kind);
  }
  EXPECT_EQ(
    kinds, (std::vector<Kind>{Kind::sheep_too_far, Kind::dog_too_close, Kind::goal_too_far,
                              Kind::zone_too_far}));
}

TEST(Bounds, ContainActualJacobiansInsideTheEnvelope)
{
  std::mt19937_64 rng(55);
  SheepParams p{0.5, 1.0, 0.1, 0.4, Vec2(0.2, 0.1)};
  const std::vector<Zone> zones{Zone{}};
  const DistanceBounds db{0.2, 6.0, 0.2, 6.0, 6.0, 2.0};
  int certified = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const auto w = oracle::random_world(rng, n, n, 2.0, 0.2);
    if (!monitor_assumptions(w, p, zones, db).empty()) {
      continue;
    }
    ++certified;
    const auto rep = feasibility_report(n, n, p, GainTable(n, 1), db);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(sheep_velocity(w, p, i).norm(), rep.f_max);
      EXPECT_LE(frobenius(jac_sheep_self(w, p, i)), rep.lambda_m);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) {
          EXPECT_LE(frobenius(jac_sheep_wrt_sheep(w, p, i, j)), rep.lambda_s);
        }
        EXPECT_LE(frobenius(jac_sheep_wrt_dog(w, p, i, j)), rep.lambda_d);
      }
    }
  }
  EXPECT_GT(certified, 100);
}
