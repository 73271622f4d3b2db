#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stopbound/boundary.hpp"
#include "stopbound/curve.hpp"
#include "stopbound/errors.hpp"
#include "stopbound/model.hpp"
#include "stopbound/parallel.hpp"
#include "stopbound/solver.hpp"

namespace stopbound {

// Counter-based generator: draw j of path k is a pure function of
// (seed, k, j), so a path never depends on how many others are simulated.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path)
      : key_(mix(seed ^ mix(path + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next() noexcept { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct McResult {
  double t = 0.0;
  double x = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;
  std::int64_t n_truncated = 0;
  std::int64_t horizon_cap = 0;
  std::uint64_t seed = 0;
};

// Reward assigned to a path still running after horizon_cap steps, as a
// function of its final (t, x). Empty means g(t, x).
using TruncationValue = std::function<double(double, double)>;

// Runs n_paths walks from (t, x) under the rule "stop at the first n with
// x_n >= b(t + n)" (ties stop) and averages g at the stopping state.
inline McResult simulate_value(const ProblemSpec& problem, const BoundaryCurve& boundary, double t,
                               double x, std::int64_t n_paths, std::int64_t horizon_cap,
                               std::uint64_t seed, const TruncationValue& truncation = {}) {
  if (n_paths < 1) throw InputError("n_paths must be positive");
  if (horizon_cap < 1) throw InputError("horizon_cap must be positive");
  if (!boundary.covers(t, t + static_cast<double>(horizon_cap))) {
    throw CoverageError("boundary does not cover [" + std::to_string(t) + ", " +
                        std::to_string(t + static_cast<double>(horizon_cap)) + "]");
  }
  McResult r{t, x, 0.0, 0.0, n_paths, 0, horizon_cap, seed};
  if (x >= boundary.at(t)) {
    r.mean = problem.g(t, x);
    return r;
  }

  const auto cap = static_cast<std::size_t>(horizon_cap);
  std::vector<double> thresholds(cap + 1);
  for (std::size_t n = 0; n <= cap; ++n) thresholds[n] = boundary.at(t + static_cast<double>(n));
  const JumpDistribution& jumps = problem.jumps();
  const double h = jumps.step();
  const auto& J = jumps.int_jumps();
  std::vector<double> cdf;
  double acc = 0.0;
  for (double p : jumps.probs()) cdf.push_back(acc += p);
  cdf.back() = 1.0;

  std::vector<double> payoff(static_cast<std::size_t>(n_paths));
  std::vector<char> truncated(payoff.size(), 0);
  parallel_for(payoff.size(), [&](std::size_t k) {
    PathStream rng(seed, k);
    std::int64_t i = 0;
    for (std::size_t n = 1; n <= cap; ++n) {
      const double u = rng.uniform();
      std::size_t a = 0;
      while (u >= cdf[a]) ++a;
      i += J[a];
      const double xn = x + static_cast<double>(i) * h;
      if (xn >= thresholds[n]) {
        payoff[k] = problem.g(t + static_cast<double>(n), xn);
        return;
      }
    }
    const double tn = t + static_cast<double>(cap);
    const double xn = x + static_cast<double>(i) * h;
    payoff[k] = truncation ? truncation(tn, xn) : problem.g(tn, xn);
    truncated[k] = 1;
  });

  // Fixed-order reduction, shifted by the first payoff so identical payoffs
  // give an exact mean and zero spread.
  const double shift = payoff.front();
  double s1 = 0.0;
  for (std::size_t k = 0; k < payoff.size(); ++k) {
    s1 += payoff[k] - shift;
    r.n_truncated += truncated[k];
  }
  const double n = static_cast<double>(n_paths);
  const double dmean = s1 / n;
  r.mean = shift + dmean;
  if (n_paths > 1) {
    double s2 = 0.0;
    for (double v : payoff) {
      const double d = (v - shift) - dmean;
      s2 += d * d;
    }
    r.std_error = std::sqrt(s2 / (n - 1.0) / n);
  }
  return r;
}

// Exact lattice policy for simulations started at (t0, x_anchor): the
// stopping thresholds of lattice_stopping_curve over n_steps steps together
// with the computed values at step n_steps, for valuing truncated paths.
struct LatticePolicy {
  BoundaryCurve curve;
  double t_end = 0.0;
  double x_anchor = 0.0;
  double h = 0.0;
  std::int64_t lo = 0;
  std::vector<double> end_values;

  double value_at_end(double x) const {
    const auto i = std::llround((x - x_anchor) / h) - lo;
    if (i < 0 || i >= static_cast<std::int64_t>(end_values.size())) {
      throw CoverageError("truncated state outside the computed layer");
    }
    return end_values[static_cast<std::size_t>(i)];
  }

  TruncationValue truncation() const {
    return [this](double, double x) { return value_at_end(x); };
  }
};

inline LatticePolicy lattice_policy(const ProblemSpec& problem, double t0, double x_anchor,
                                    std::int64_t n_steps, const HorizonSchedule& schedule = {},
                                    std::int64_t horizon = 0) {
  if (n_steps < 1) throw InputError("n_steps must be at least 1");
  if (horizon == 0) horizon = 2 * n_steps + schedule.T_start;
  LatticePolicy pol;
  pol.curve = lattice_stopping_curve(problem, t0, x_anchor, n_steps, schedule, horizon);
  pol.t_end = t0 + static_cast<double>(n_steps);
  pol.x_anchor = x_anchor;
  pol.h = problem.jumps().step();
  const DpOptions opt{detail::resolve(problem, schedule.terminal), schedule.tail_mass};
  detail::backward_induction(problem, t0, x_anchor, {0, 0}, horizon, opt,
                             [&](const detail::Layer& layer) {
                               if (layer.n != n_steps) return;
                               pol.lo = layer.lo;
                               pol.end_values.assign(layer.values.begin(), layer.values.end());
                             });
  return pol;
}

}  // namespace stopbound
