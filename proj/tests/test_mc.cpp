#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "stopbound/mc.hpp"

using namespace stopbound;

namespace {

BoundaryCurve flat(double b, double t0, std::int64_t n) {
  BoundaryCurve c;
  c.tol_x = 1e-6;
  for (std::int64_t k = 0; k <= n; ++k) {
    c.ts.push_back(t0 + static_cast<double>(k));
    c.bs.push_back(b);
  }
  return c;
}

}  // namespace

TEST(PathStream, DeterministicAndUniform) {
  PathStream a(5, 17), b(5, 17), c(5, 18);
  double sum = 0.0;
  bool differs = false;
  for (int i = 0; i < 20000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    differs |= u != c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_TRUE(differs);
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Simulate, ImmediateStopHasNoSpread) {
  const ProblemSpec chow = preset("chow_robbins");
  const McResult r = simulate_value(chow, flat(0.5, 1.0, 10), 1.0, 0.8, 500, 10, 1);
  EXPECT_DOUBLE_EQ(r.mean, 0.8);
  EXPECT_EQ(r.std_error, 0.0);
  EXPECT_EQ(r.n_truncated, 0);
}

TEST(Simulate, SeedDeterminesResultAcrossThreadCounts) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = flat(0.5, 1.0, 200);
  setenv("STOPBOUND_THREADS", "1", 1);
  const McResult a = simulate_value(chow, c, 1.0, 0.0, 4000, 200, 9);
  setenv("STOPBOUND_THREADS", "3", 1);
  const McResult b = simulate_value(chow, c, 1.0, 0.0, 4000, 200, 9);
  unsetenv("STOPBOUND_THREADS");
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.n_truncated, b.n_truncated);
  const McResult other = simulate_value(chow, c, 1.0, 0.0, 4000, 200, 10);
  EXPECT_NE(a.mean, other.mean);
}

// Path k is the same walk whatever n_paths is. With one step and a flat
// boundary at 1/2 every payoff is +-1/2, so the payoffs of paths 0 and 1
// can be recovered from the 1-path and 2-path means.
TEST(Simulate, PathsIndependentOfCount) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = flat(0.5, 1.0, 1);
  const McResult one = simulate_value(chow, c, 1.0, 0.0, 1, 1, 3);
  const McResult two = simulate_value(chow, c, 1.0, 0.0, 2, 1, 3);
  const McResult many = simulate_value(chow, c, 1.0, 0.0, 1000, 1, 3);
  EXPECT_EQ(std::abs(one.mean), 0.5);
  const double p1 = 2.0 * two.mean - one.mean;
  EXPECT_EQ(std::abs(p1), 0.5);
  // truncated paths are exactly the down-steps
  EXPECT_EQ(one.n_truncated, one.mean < 0 ? 1 : 0);
  EXPECT_NEAR(many.mean, 0.0, 4.0 * many.std_error);
  EXPECT_NEAR(many.std_error, 0.5 / std::sqrt(1000.0), 1e-3);
}

TEST(Simulate, TruncationCountFallsWithCap) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = flat(0.5, 1.0, 400);
  std::int64_t prev = 1 << 30;
  for (std::int64_t cap : {10, 50, 200, 400}) {
    const McResult r = simulate_value(chow, c, 1.0, 0.0, 5000, cap, 2);
    EXPECT_LE(r.n_truncated, prev);
    prev = r.n_truncated;
  }
  EXPECT_LT(prev, 5000 / 10);
}

TEST(Simulate, CoverageAndArguments) {
  const ProblemSpec chow = preset("chow_robbins");
  const BoundaryCurve c = flat(0.5, 1.0, 10);
  EXPECT_THROW(simulate_value(chow, c, 1.0, 0.0, 10, 11, 1), CoverageError);
  EXPECT_THROW(simulate_value(chow, c, 0.5, 0.0, 10, 5, 1), CoverageError);
  EXPECT_THROW(simulate_value(chow, c, 1.0, 0.0, 0, 5, 1), InputError);
  EXPECT_THROW(simulate_value(chow, c, 1.0, 0.0, 10, 0, 1), InputError);
}

TEST(Simulate, DistToIntegerCalibration) {
  // V(1, -1.3) = -0.09: wait for the first state >= -0.3, which on the
  // lattice -1.3 + Z is -0.3 itself (or any higher point with the same gain).
  const ProblemSpec d = preset("dist_to_integer");
  const LatticePolicy pol = lattice_policy(d, 1.0, -1.3, 300);
  const McResult r = simulate_value(d, pol.curve, 1.0, -1.3, 20000, 300, 4, pol.truncation());
  EXPECT_NEAR(r.mean, -0.09, 1e-12);
  EXPECT_LE(r.std_error, 1e-15);  // payoffs differ only by rounding
}

TEST(Simulate, ChowRobbinsAgreesWithSolver) {
  const ProblemSpec chow = preset("chow_robbins");
  const HorizonSchedule s{64, 14, 1e-6};
  const LatticePolicy pol = lattice_policy(chow, 1.0, 0.0, 200, s);
  const McResult r = simulate_value(chow, pol.curve, 1.0, 0.0, 40000, 200, 11, pol.truncation());
  const ValueEstimate v = value_at(chow, 1.0, 0.0, s);
  EXPECT_LE(std::abs(r.mean - v.value), 4.0 * r.std_error + 10.0 * v.err_est) << r.mean << " vs " << v.value;
  EXPECT_GT(r.std_error, 0.0);
}

TEST(LatticePolicy, EndValuesAndCoverage) {
  const ProblemSpec chow = preset("chow_robbins");
  const LatticePolicy pol = lattice_policy(chow, 1.0, 0.0, 20);
  EXPECT_DOUBLE_EQ(pol.t_end, 21.0);
  EXPECT_EQ(pol.curve.size(), 21U);
  // Default horizon 2 * 20 + 64 leaves 84 steps after the end layer.
  const double v84 = finite_horizon_value(chow, 21.0, 0.0, {0, 0}, 84, {Terminal::majorant}).front();
  EXPECT_NEAR(pol.value_at_end(0.0), v84, 1e-12);
  EXPECT_THROW(pol.value_at_end(1e6), CoverageError);
  EXPECT_THROW(lattice_policy(chow, 1.0, 0.0, 0), InputError);
}
