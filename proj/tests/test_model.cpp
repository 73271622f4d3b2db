#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stopbound/boundary.hpp"
#include "stopbound/model.hpp"

using namespace stopbound;

TEST(JumpDistribution, SymmetricBernoulli) {
  const auto d = JumpDistribution::make({{Rational(-1), Rational(1, 2)}, {Rational(1), Rational(1, 2)}});
  EXPECT_EQ(d.h(), Rational(1));
  EXPECT_EQ(d.int_jumps(), (std::vector<std::int64_t>{-1, 1}));
  EXPECT_EQ(d.xi_star(), Rational(1));
  EXPECT_EQ(d.mean(), Rational(0));
  EXPECT_EQ(d.variance(), Rational(1));
}

TEST(JumpDistribution, ThreeJump) {
  const auto d = JumpDistribution::make({{Rational(1), Rational(7, 20)},
                                         {Rational(-3, 2), Rational(24, 85)},
                                         {Rational(1, 5), Rational(25, 68)}});
  EXPECT_EQ(d.h(), Rational(1, 10));
  EXPECT_EQ(d.int_jumps(), (std::vector<std::int64_t>{-15, 2, 10}));
  EXPECT_EQ(d.xi_star(), Rational(1));
  EXPECT_EQ(d.mean(), Rational(0));
  EXPECT_EQ(d.variance(), Rational(1));
  EXPECT_EQ(d.min_jump(), -15);
  EXPECT_EQ(d.max_jump(), 10);
}

TEST(JumpDistribution, Rejections) {
  EXPECT_THROW(JumpDistribution::make({{Rational(-1), Rational(1)}}), SignError);
  EXPECT_THROW(JumpDistribution::make({{Rational(1), Rational(1)}}), SignError);
  EXPECT_THROW(JumpDistribution::make({{Rational(-1), Rational(1, 2)}, {Rational(1), Rational(1, 3)}}),
               ProbSumError);
  EXPECT_THROW(JumpDistribution::make({{Rational(-1), Rational(3, 2)}, {Rational(1), Rational(-1, 2)}}),
               ProbSumError);
  EXPECT_THROW(JumpDistribution::make({{Rational(-1), Rational(1, 2)},
                                       {Rational(1), Rational(1, 4)},
                                       {Rational(1), Rational(1, 4)}}),
               DuplicateAtomError);
  EXPECT_THROW(JumpDistribution::make({}), InputError);
  EXPECT_THROW(JumpDistribution::make({{Rational(0), Rational(1, 2)}, {Rational(1), Rational(1, 2)}}),
               InputError);
}

// Random rational laws: feeding the canonical atoms back reproduces every
// derived field, and h divides each atom exactly.
TEST(JumpDistribution, CanonicalisationIsIdempotent) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nat(2, 5), num(1, 40), den(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = nat(rng);
    std::vector<JumpAtom> atoms;
    std::vector<int> weights;
    int total = 0;
    for (int i = 0; i < n; ++i) {
      weights.push_back(num(rng));
      total += weights.back();
    }
    for (int i = 0; i < n; ++i) {
      Rational v(num(rng), den(rng));
      if (i % 2 == 0) v = Rational(0) - v;
      atoms.push_back({v, Rational(weights[static_cast<std::size_t>(i)], total)});
    }
    JumpDistribution d;
    try {
      d = JumpDistribution::make(atoms);
    } catch (const DuplicateAtomError&) {
      continue;
    }
    const JumpDistribution again = JumpDistribution::make(d.atoms());
    EXPECT_TRUE(again == d);
    EXPECT_EQ(again.h(), d.h());
    EXPECT_EQ(again.int_jumps(), d.int_jumps());
    EXPECT_EQ(again.mean(), d.mean());
    EXPECT_EQ(again.variance(), d.variance());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Rational q = d.atoms()[i].value / d.h();
      EXPECT_TRUE(q.is_integer());
      EXPECT_EQ(q.num(), d.int_jumps()[i]);
    }
    for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d.atoms()[i - 1].value, d.atoms()[i].value);
  }
}

TEST(JumpDistribution, VarianceProxyOfPresets) {
  // Both laws are sub-Gaussian with proxy equal to their variance.
  EXPECT_NEAR(symmetric_bernoulli().variance_proxy(), 1.0, 1e-9);
  EXPECT_NEAR(three_jump_distribution().variance_proxy(), 1.0, 1e-6);
  const auto drift_up = JumpDistribution::make({{Rational(-1), Rational(1, 3)}, {Rational(1), Rational(2, 3)}});
  EXPECT_TRUE(std::isinf(drift_up.variance_proxy()));
}

TEST(GainFunction, Families) {
  const auto chow = GainFunction::chow_robbins();
  EXPECT_DOUBLE_EQ(chow(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(chow.dx(4.0, -3.0), 0.25);
  EXPECT_FALSE(chow.in_domain(0.0));

  const auto d = GainFunction::dist_to_integer();
  EXPECT_DOUBLE_EQ(d(1.0, -0.3), -0.09);
  EXPECT_DOUBLE_EQ(d(1.0, -1.3), -1.69);
  EXPECT_NEAR(d(1.0, 2.7), -0.09, 1e-15);
  EXPECT_FALSE(d.differentiable_at(0.5));
  EXPECT_FALSE(d.differentiable_at(2.0));
  EXPECT_TRUE(d.differentiable_at(-0.5));
  EXPECT_TRUE(d.differentiable_at(0.3));

  const auto s = GainFunction::sqrt_threshold();
  EXPECT_DOUBLE_EQ(s(4.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(s(4.0, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(s(4.0, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(s.dx(4.0, 1.0), 3.0);

  const auto tilt = GainFunction::affine_tilt(chow, Rational(-1, 4));
  EXPECT_DOUBLE_EQ(tilt(2.0, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(tilt.dx(2.0, 1.0), 0.25);
  EXPECT_TRUE(tilt.convex_in_x());
}

TEST(GainFunction, FillRowMatchesPointwise) {
  for (const auto& g : {GainFunction::chow_robbins(), GainFunction::dist_to_integer(),
                        GainFunction::sqrt_threshold(),
                        GainFunction::affine_tilt(GainFunction::dist_to_integer(), Rational(1, 3))}) {
    std::vector<double> row(57);
    g.fill_row(3.5, -0.37, 0.1, -20, row);
    for (std::size_t k = 0; k < row.size(); ++k) {
      EXPECT_DOUBLE_EQ(row[k], g(3.5, -0.37 + static_cast<double>(-20 + static_cast<int>(k)) * 0.1));
    }
  }
}

TEST(ProblemSpec, Validation) {
  EXPECT_THROW(ProblemSpec("p", symmetric_bernoulli(), GainFunction::chow_robbins(), Rational(0)),
               InputError);
  EXPECT_THROW(ProblemSpec("p", symmetric_bernoulli(), GainFunction::dist_to_integer(), Rational(1),
                           {MajorantKind::exponential_mixture, 1.0}),
               InputError);
  EXPECT_THROW(ProblemSpec("p", symmetric_bernoulli(), GainFunction::chow_robbins(), Rational(1),
                           {MajorantKind::exponential_mixture, 0.5}),
               InputError);
  EXPECT_THROW(preset("nope"), InputError);
  for (const auto& name : preset_names()) {
    const ProblemSpec p = preset(name);
    EXPECT_EQ(p.name(), name);
    EXPECT_TRUE(p.has_majorant());
  }
}

// U >= g and U(t, x) >= E U(t+1, x + xi) on a grid of states.
TEST(Majorant, DominatesAndIsExcessive) {
  for (const auto& name : preset_names()) {
    const ProblemSpec p = preset(name);
    const auto& atoms = p.jumps().atoms();
    const auto& probs = p.jumps().probs();
    for (double t : {1.0, 1.7, 3.0, 10.0, 100.0, 1e4}) {
      for (double x = -30.0; x <= 30.0; x += 0.173) {
        const double u = p.majorant_value(t, x);
        EXPECT_GE(u, p.g(t, x)) << name << " t=" << t << " x=" << x;
        double eu = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
          eu += probs[k] * p.majorant_value(t + 1.0, x + atoms[k].value.to_double());
        }
        EXPECT_GE(u, eu - 1e-12 * (1.0 + std::abs(u))) << name << " t=" << t << " x=" << x;
      }
    }
  }
}

TEST(Majorant, TangencyConstant) {
  const double a = detail::tangency_constant();
  EXPECT_NEAR((1.0 - a * a) * detail::gaussian_mills(a), a, 1e-12);
  // The mixture touches x/t along x = a sqrt(t).
  for (double t : {1.0, 4.0, 50.0}) {
    const double x = a * std::sqrt(t);
    EXPECT_NEAR(detail::exponential_mixture(t, x), x / t, 1e-10);
  }
}

TEST(Classify, RegionsFromBoundary) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = boundary_curve(chow, {1.0, 2.0}, BracketHint{0.0, 1.0}, 1e-4);
  EXPECT_EQ(classify_point(chow, c, 1.0, 2.0), Region::stopping);
  EXPECT_EQ(classify_point(chow, c, 1.0, 0.0), Region::continuation);
  EXPECT_THROW(classify_point(chow, c, 2.5, 0.0), OutOfRangeError);

  const ProblemSpec d = preset("dist_to_integer");
  const BoundaryCurve cd = boundary_curve(d, {1.0, 2.0, 3.0}, BracketHint{-1.0, 0.0}, 1e-6);
  for (double t : {1.0, 1.5, 2.25, 3.0}) {
    EXPECT_EQ(classify_point(d, cd, t, -0.7), Region::continuation);
    EXPECT_EQ(classify_point(d, cd, t, -0.3), Region::stopping);
  }
}

TEST(Curve, InterpolationAndCoverage) {
  BoundaryCurve c;
  c.ts = {1.0, 2.0, 4.0};
  c.bs = {0.0, 1.0, 2.0};
  c.tol_x = 1e-3;
  EXPECT_DOUBLE_EQ(c.at(2.0), 1.0);
  EXPECT_DOUBLE_EQ(c.at(1.5), 0.5);
  EXPECT_DOUBLE_EQ(c.at(3.0), 1.5);
  EXPECT_TRUE(c.covers(1.0, 4.0));
  EXPECT_FALSE(c.covers(0.5, 4.0));
  EXPECT_THROW(c.at(4.01), OutOfRangeError);
}
