#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "stopbound/kinks.hpp"

using namespace stopbound;

namespace {

ValueSlice synthetic(double x0, double dx, std::size_t n, const std::function<double(double)>& f,
                     double err = 0.0) {
  ValueSlice s;
  s.t0 = 1.0;
  s.x0 = x0;
  s.dx = dx;
  s.err_est = err;
  for (std::size_t i = 0; i < n; ++i) {
    s.values.push_back(f(s.x(i)));
    s.gains.push_back(0.0);
  }
  return s;
}

BoundaryCurve constant_curve(double b, double t0, double t1) {
  BoundaryCurve c;
  c.tol_x = 1e-6;
  for (double t = t0; t <= t1 + 1e-12; t += 1.0) {
    c.ts.push_back(t);
    c.bs.push_back(b);
  }
  return c;
}

// Path-by-path enumeration of the exact-hit event.
double brute_hit(const JumpDistribution& jumps, const BoundaryCurve& c, double t, double x,
                 std::int64_t m, std::int64_t s, double margin) {
  const double h = jumps.step();
  std::function<double(std::int64_t, std::int64_t)> go = [&](std::int64_t n, std::int64_t i) {
    if (n == m) return i == s ? 1.0 : 0.0;
    if (!(x + static_cast<double>(i) * h < c.at(t + static_cast<double>(n)) - margin)) return 0.0;
    double p = 0.0;
    for (std::size_t k = 0; k < jumps.size(); ++k) p += jumps.probs()[k] * go(n + 1, i + jumps.int_jumps()[k]);
    return p;
  };
  return go(0, 0);
}

}  // namespace

TEST(Slopes, LinearSliceHasUnitSlopesAndNoKinks) {
  const ValueSlice s = synthetic(-1.0, 0.01, 201, [](double x) { return x; });
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const Slopes sl = one_sided_slopes(s, i);
    EXPECT_NEAR(sl.left, 1.0, 1e-9);
    EXPECT_NEAR(sl.right, 1.0, 1e-9);
  }
  EXPECT_TRUE(detect_kinks(s, 1e-6).empty());
  EXPECT_THROW(one_sided_slopes(s, 0), IndexError);
  EXPECT_THROW(one_sided_slopes(s, 200), IndexError);
}

TEST(DetectKinks, CornerBetweenNodesLocatedExactly) {
  for (double c : {0.0, 0.0013, 0.0071, -0.3333}) {
    const ValueSlice s = synthetic(-1.0, 0.01, 201, [c](double x) { return std::abs(x - c); });
    const auto k = detect_kinks(s, 0.5);
    ASSERT_EQ(k.size(), 1U) << c;
    EXPECT_NEAR(k[0].x, c, 1e-9);
    EXPECT_NEAR(*k[0].gap, 2.0, 1e-9);
    EXPECT_EQ(k[0].source, KinkSource::detected);
  }
}

TEST(DetectKinks, SmallCornersBelowToleranceIgnored) {
  const ValueSlice s = synthetic(-1.0, 0.01, 201, [](double x) { return 0.01 * std::abs(x) + 0.1 * x * x; });
  EXPECT_TRUE(detect_kinks(s, 0.05).empty());
  EXPECT_EQ(detect_kinks(s, 0.012).size(), 1U);
}

TEST(DetectKinks, ConcaveCornersAreNotKinks) {
  const ValueSlice s = synthetic(-1.0, 0.01, 201, [](double x) { return -std::abs(x); });
  EXPECT_TRUE(detect_kinks(s, 0.5).empty());
}

TEST(DetectKinks, NoiseFloorEnforced) {
  const ValueSlice s = synthetic(-1.0, 0.01, 201, [](double x) { return x; }, 1e-3);
  EXPECT_NEAR(noise_floor(s), 0.4, 1e-9);
  EXPECT_THROW(detect_kinks(s, 0.1), NoiseFloorError);
  try {
    detect_kinks(s, 0.1);
  } catch (const NoiseFloorError& e) {
    EXPECT_NEAR(e.floor(), 0.4, 1e-9);
    EXPECT_EQ(e.exit_code(), 3);
  }
  EXPECT_NO_THROW(detect_kinks(s, 0.41));
  const ValueSlice exact = synthetic(-1.0, 0.01, 201, [](double x) { return x; });
  EXPECT_THROW(detect_kinks(exact, 0.0), NoiseFloorError);
}

TEST(HitProbability, MatchesPathEnumeration) {
  const std::vector<std::pair<const char*, JumpDistribution>> laws{
      {"bernoulli", symmetric_bernoulli()}, {"three_jump", three_jump_distribution()}};
  BoundaryCurve c;
  c.tol_x = 1e-6;
  c.ts = {1, 2, 3, 4, 5};
  c.bs = {0.4, 0.55, 0.61, 0.9, 1.0};
  for (const auto& [name, jumps] : laws) {
    for (std::int64_t m = 1; m <= 4; ++m) {
      const auto sums = detail::reachable_sums(jumps, m).back();
      for (std::int64_t s : sums) {
        for (double x : {-1.2, -0.35, 0.1, 0.39}) {
          const double dp = exact_hit_probability(jumps, c, 1.0, x, m, s, 0.0);
          EXPECT_NEAR(dp, brute_hit(jumps, c, 1.0, x, m, s, 0.0), 1e-14) << name << " m=" << m << " s=" << s;
        }
      }
    }
  }
}

TEST(HitProbability, MarginExcludesNearBoundaryPaths) {
  const JumpDistribution j = symmetric_bernoulli();
  const BoundaryCurve c = constant_curve(0.5, 1.0, 4.0);
  EXPECT_DOUBLE_EQ(exact_hit_probability(j, c, 1.0, 0.45, 1, 1, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(exact_hit_probability(j, c, 1.0, 0.45, 1, 1, 0.1), 0.0);
  // Two steps up from -1.5: stay below at -0.5, land at 0.5.
  EXPECT_DOUBLE_EQ(exact_hit_probability(j, c, 1.0, -1.5, 2, 2, 0.0), 0.25);
}

TEST(PredictKinks, ChowRobbinsFirstTwoSteps) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve b = boundary_curve(chow, {1.0, 2.0, 3.0}, BracketHint{0.0, 1.0}, 1e-5, {64, 14, 1e-6});
  PredictOptions opt;
  opt.expected_gaps = false;
  const auto k = predict_kinks(chow, b, 1.0, {-2.0, b.bs[0]}, 2, opt);
  ASSERT_EQ(k.size(), 2U);
  EXPECT_NEAR(k[0].x, b.bs[2] - 2.0, 1e-12);
  EXPECT_EQ(*k[0].m, 2);
  EXPECT_DOUBLE_EQ(*k[0].hit_prob, 0.25);
  EXPECT_NEAR(k[1].x, b.bs[1] - 1.0, 1e-12);
  EXPECT_EQ(*k[1].m, 1);
  EXPECT_DOUBLE_EQ(*k[1].hit_prob, 0.5);
  for (const auto& p : k) {
    EXPECT_EQ(p.source, KinkSource::predicted);
    EXPECT_FALSE(p.expected_gap.has_value());
  }
}

TEST(PredictKinks, Preconditions) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = constant_curve(0.5, 1.0, 3.0);
  EXPECT_THROW(predict_kinks(chow, c, 1.0, {-2.0, 0.5}, 0), InputError);
  EXPECT_THROW(predict_kinks(chow, c, 1.0, {-2.0, 0.5}, 3), BoundaryCoverageError);
}

TEST(CrossValidate, StatusesAndMerge) {
  KinkPoint p1;
  p1.x = 0.1;
  p1.source = KinkSource::predicted;
  p1.m = 1;
  p1.expected_gap = 0.5;
  KinkPoint p2 = p1;
  p2.x = 0.7;
  p2.expected_gap = 1e-5;
  KinkPoint p3 = p1;
  p3.x = -0.4;
  KinkPoint d1;
  d1.x = 0.104;
  d1.left_slope = 0.1;
  d1.right_slope = 0.6;
  d1.gap = 0.5;
  KinkPoint d2 = d1;
  d2.x = -1.0;

  EXPECT_TRUE(cross_validate({}, {d1}, 0.01).pass());

  const CrossValidation cv = cross_validate({p1, p2, p3}, {d1, d2}, 0.01, 1e-3);
  using S = CrossValidation::Match::Status;
  EXPECT_EQ(cv.rows[0].status, S::matched);
  EXPECT_EQ(cv.rows[1].status, S::below_floor);
  EXPECT_EQ(cv.rows[2].status, S::unmatched);
  EXPECT_FALSE(cv.pass());
  ASSERT_EQ(cv.unexplained.size(), 1U);
  EXPECT_DOUBLE_EQ(cv.unexplained[0].x, -1.0);
  EXPECT_STREQ(match_status_name(S::below_floor), "below floor");

  const auto merged = merge_kinks(cv);
  ASSERT_EQ(merged.size(), 4U);
  EXPECT_DOUBLE_EQ(merged[0].x, -1.0);
  EXPECT_EQ(merged[0].source, KinkSource::detected);
  EXPECT_EQ(merged[2].source, KinkSource::both);
  EXPECT_DOUBLE_EQ(*merged[2].gap, 0.5);
  EXPECT_EQ(merged[3].source, KinkSource::predicted);

  EXPECT_TRUE(cross_validate({p1, p2}, {d1}, 0.01, 1e-3).pass());
}

TEST(Convexity, WindowAndSign) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = constant_curve(0.5, 1.0, 2.0);
  ValueSlice lin = synthetic(-1.0, 0.01, 201, [](double x) { return 0.3 * x; });
  EXPECT_TRUE(convexity_check(chow, lin, c).pass);
  ValueSlice conc = synthetic(-1.0, 0.01, 201, [](double x) { return -x * x; });
  const ConvexityReport r = convexity_check(chow, conc, c);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.violations, 199U);
  ValueSlice far = synthetic(0.0, 0.01, 301, [](double x) { return x; });
  EXPECT_THROW(convexity_check(chow, far, c), RangeError);
}

TEST(Convexity, ChowRobbinsValueIsConvexBelowTheWindowEdge) {
  const ProblemSpec chow = preset("chow_robbins");
  const HorizonSchedule s{64, 14, 1e-6};
  const BoundaryCurve b = boundary_curve(chow, {1.0}, BracketHint{0.0, 1.0}, 1e-5, s);
  const double hi = b.bs[0] + 1.0;
  const ValueSlice sl = value_slice(chow, 1.0, hi - 3.0, hi, 301, s);
  EXPECT_TRUE(convexity_check(chow, sl, b).pass);
}
