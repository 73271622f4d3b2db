#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stopbound/curve.hpp"
#include "stopbound/errors.hpp"
#include "stopbound/model.hpp"
#include "stopbound/parallel.hpp"
#include "stopbound/solver.hpp"

namespace stopbound {

// Value gap V - g at one point and the stopping verdict V - g <= tol_v,
// tol_v = 10 * err_est plus a few ulps of |V| + |g| so that rounding in the
// expectation never reads as continuation.
struct StopProbe {
  double gap = 0.0;
  double err_est = 0.0;
  double tol_v = 0.0;
  bool stopping = false;
};

inline StopProbe probe_stopping(const ProblemSpec& problem, double t, double x,
                                const HorizonSchedule& schedule) {
  const ValueEstimate v = value_at(problem, t, x, schedule);
  StopProbe p;
  p.gap = v.value - problem.g(t, x);
  p.err_est = v.err_est;
  const double ulps = 16.0 * std::numeric_limits<double>::epsilon() *
                      (std::abs(v.value) + std::abs(problem.g(t, x)));
  p.tol_v = 10.0 * v.err_est + ulps;
  p.stopping = p.gap <= p.tol_v;
  return p;
}

struct BoundaryPoint {
  double b = 0.0;
  double tol_v = 0.0;  // largest tol_v among the probes
  int probes = 0;
};

// Bisection for inf{x : V(t,x) - g(t,x) <= tol_v} inside [x_lo, x_hi]; the
// lower end must be continuation and the upper end stopping.
inline BoundaryPoint boundary_point(const ProblemSpec& problem, double t, double x_lo,
                                    double x_hi, double tol_x, const HorizonSchedule& schedule) {
  if (!(tol_x > 0.0)) throw InputError("tol_x must be positive");
  if (!(x_lo < x_hi)) throw BracketError("bracket needs x_lo < x_hi");
  BoundaryPoint out;
  const StopProbe lo = probe_stopping(problem, t, x_lo, schedule);
  const StopProbe hi = probe_stopping(problem, t, x_hi, schedule);
  out.probes = 2;
  out.tol_v = std::max(lo.tol_v, hi.tol_v);
  if (lo.stopping || !hi.stopping) {
    throw BracketError("no boundary bracket at t = " + std::to_string(t) + ": [" +
                       std::to_string(x_lo) + ", " + std::to_string(x_hi) + "] classifies as " +
                       (lo.stopping ? "stopping" : "continuation") + "/" +
                       (hi.stopping ? "stopping" : "continuation"));
  }
  while (x_hi - x_lo > tol_x) {
    const double mid = 0.5 * (x_lo + x_hi);
    const StopProbe p = probe_stopping(problem, t, mid, schedule);
    ++out.probes;
    out.tol_v = std::max(out.tol_v, p.tol_v);
    (p.stopping ? x_hi : x_lo) = mid;
  }
  out.b = 0.5 * (x_lo + x_hi);
  return out;
}

inline double boundary_at(const ProblemSpec& problem, double t, double x_lo, double x_hi,
                          double tol_x, const HorizonSchedule& schedule = {}) {
  return boundary_point(problem, t, x_lo, x_hi, tol_x, schedule).b;
}

struct BracketHint {
  double lo = 0.0;
  double hi = 0.0;
};

namespace detail {

// Widens [lo, hi] around `center` until lo is continuation and hi stopping.
inline std::pair<double, double> find_bracket(const ProblemSpec& problem, double t, double lo,
                                              double hi, const HorizonSchedule& schedule) {
  double w_lo = std::max(hi - lo, 1e-3);
  double w_hi = w_lo;
  for (int k = 0; k < 60; ++k) {
    const bool lo_ok = !probe_stopping(problem, t, lo, schedule).stopping;
    const bool hi_ok = lo_ok ? probe_stopping(problem, t, hi, schedule).stopping : true;
    if (lo_ok && hi_ok) return {lo, hi};
    if (!lo_ok) {
      hi = lo;
      lo -= w_lo;
      w_lo *= 2.0;
    } else {
      lo = hi;
      hi += w_hi;
      w_hi *= 2.0;
    }
  }
  throw BracketError("could not bracket the boundary at t = " + std::to_string(t));
}

}  // namespace detail

// b on a strictly increasing t grid. The first point uses `first` (or an
// outward search from 0); later points search around the previous b.
inline BoundaryCurve boundary_curve(const ProblemSpec& problem, const std::vector<double>& t_grid,
                                    std::optional<BracketHint> first, double tol_x,
                                    const HorizonSchedule& schedule = {}) {
  if (t_grid.empty()) throw InputError("empty t grid");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) throw InputError("t grid must be strictly increasing");
  }
  BoundaryCurve c;
  c.ts = t_grid;
  c.bs.resize(t_grid.size());
  c.tol_x = tol_x;
  c.problem_id = problem.name();
  double lo = first ? first->lo : -0.5;
  double hi = first ? first->hi : 0.5;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (k > 0) {
      const double step = k > 1 ? std::abs(c.bs[k - 1] - c.bs[k - 2]) : 0.0;
      const double w = std::max({2.0 * step, 8.0 * tol_x, 1e-3});
      lo = c.bs[k - 1] - w;
      hi = c.bs[k - 1] + 2.0 * w;
    }
    const auto [blo, bhi] = detail::find_bracket(problem, t_grid[k], lo, hi, schedule);
    const BoundaryPoint p = boundary_point(problem, t_grid[k], blo, bhi, tol_x, schedule);
    c.bs[k] = p.b;
    c.tol_v = std::max(c.tol_v, p.tol_v);
  }
  return c;
}

struct TiltedCurve {
  double c = 0.0;
  std::vector<double> ts;
  std::vector<double> tilted;  // b(t) - c * t
};

inline TiltedCurve tilt(const BoundaryCurve& curve, double c) {
  TiltedCurve out{c, curve.ts, {}};
  out.tilted.reserve(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) out.tilted.push_back(curve.bs[k] - c * curve.ts[k]);
  return out;
}

struct BoundaryKink {
  double t = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
  double gap() const noexcept { return right_slope - left_slope; }
};

struct BoundaryKinkScan {
  static constexpr const char* kLabel = "conjectural, resolution-limited";
  double slope_gap_tol = 0.0;  // effective threshold (never below the floor)
  double floor = 0.0;          // 2 tol_x / smallest grid gap
  std::vector<BoundaryKink> points;
};

// Grid points where the one-sided secant slopes of b differ by more than
// slope_gap_tol. Exploratory output; a requested tolerance below the
// resolution floor is raised to the floor.
inline BoundaryKinkScan boundary_kink_scan(const BoundaryCurve& curve, double slope_gap_tol) {
  BoundaryKinkScan scan;
  if (curve.size() < 3) return scan;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < curve.size(); ++k) min_gap = std::min(min_gap, curve.ts[k] - curve.ts[k - 1]);
  scan.floor = 2.0 * curve.tol_x / min_gap;
  scan.slope_gap_tol = std::max(slope_gap_tol, scan.floor);
  for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
    const double left = (curve.bs[k] - curve.bs[k - 1]) / (curve.ts[k] - curve.ts[k - 1]);
    const double right = (curve.bs[k + 1] - curve.bs[k]) / (curve.ts[k + 1] - curve.ts[k]);
    if (std::abs(right - left) > scan.slope_gap_tol) scan.points.push_back({curve.ts[k], left, right});
  }
  return scan;
}

// Stopping thresholds on the lattice x_anchor + hZ for times t0 + n,
// n = 0..n_steps, read off one backward induction of the given horizon
// (default 2 * n_steps + T_start). bs[n] is the lowest state of the
// stopping run (V - g <= 10 * schedule.tol) found by walking from the
// walk's mean position at step n: down while stopping, otherwise up until
// stopping. Walking from the middle keeps the band edges, where the DP reads
// terminal values, out of the decision. tol_x is h.
inline BoundaryCurve lattice_stopping_curve(const ProblemSpec& problem, double t0, double x_anchor,
                                            std::int64_t n_steps,
                                            const HorizonSchedule& schedule = {},
                                            std::int64_t horizon = 0) {
  if (n_steps < 1) throw InputError("n_steps must be at least 1");
  if (horizon == 0) horizon = 2 * n_steps + schedule.T_start;
  if (horizon < n_steps) throw InputError("horizon shorter than n_steps");
  const double h = problem.jumps().step();
  const double tol_v = 10.0 * schedule.tol;
  double drift = 0.0;
  for (std::size_t k = 0; k < problem.jumps().size(); ++k) {
    drift += problem.jumps().probs()[k] * static_cast<double>(problem.jumps().int_jumps()[k]);
  }
  BoundaryCurve c;
  c.ts.resize(static_cast<std::size_t>(n_steps + 1));
  c.bs.resize(c.ts.size());
  c.tol_x = h;
  c.tol_v = tol_v;
  c.problem_id = problem.name();
  std::vector<double> gains;
  const DpOptions opt{detail::resolve(problem, schedule.terminal), schedule.tail_mass};
  detail::backward_induction(
      problem, t0, x_anchor, {0, 0}, horizon, opt, [&](const detail::Layer& layer) {
        if (layer.n > n_steps) return;
        const double t = t0 + static_cast<double>(layer.n);
        const auto size = static_cast<std::int64_t>(layer.values.size());
        gains.resize(layer.values.size());
        problem.gain().fill_row(t, x_anchor, h, layer.lo, gains);
        auto stopping = [&](std::int64_t k) {
          return layer.values[static_cast<std::size_t>(k)] - gains[static_cast<std::size_t>(k)] <=
                 tol_v;
        };
        std::int64_t k = std::llround(drift * static_cast<double>(layer.n)) - layer.lo;
        k = std::clamp<std::int64_t>(k, 0, size - 1);
        if (stopping(k)) {
          while (k > 0 && stopping(k - 1)) --k;
        } else {
          while (k < size && !stopping(k)) ++k;
        }
        const auto n = static_cast<std::size_t>(layer.n);
        c.ts[n] = t;
        c.bs[n] = x_anchor + static_cast<double>(layer.lo + k) * h;
      });
  return c;
}

}  // namespace stopbound
