#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stopbound/boundary.hpp"
#include "stopbound/kinks.hpp"
#include "stopbound/mc.hpp"
#include "stopbound/model.hpp"
#include "stopbound/solver.hpp"

namespace stopbound {

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  std::string relation;  // how measured is compared with limit, for display
  bool pass = false;
};

struct VerifyConfig {
  double t = 1.0;
  double tol_x = 1e-5;
  double delta = 1e-3;
  std::int64_t slice_points = 201;
  std::int64_t mc_paths = 20000;
  std::int64_t mc_cap = 1000;
  std::uint64_t seed = 1;
  HorizonSchedule schedule{};
};

namespace detail {

inline CheckRow at_most(std::string name, double measured, double limit) {
  return {std::move(name), measured, limit, "<=", measured <= limit};
}

inline CheckRow at_least(std::string name, double measured, double limit) {
  return {std::move(name), measured, limit, ">=", measured >= limit};
}

}  // namespace detail

// Property checks at one time t: Bellman residuals, convexity left of the
// boundary, smooth fit at the boundary, Monte Carlo agreement, plus closed
// forms where the gain family has one.
inline std::vector<CheckRow> run_verify(const ProblemSpec& problem, const VerifyConfig& cfg) {
  using detail::at_least;
  using detail::at_most;
  std::vector<CheckRow> rows;
  const double t = cfg.t;
  const HorizonSchedule& sch = cfg.schedule;
  const BoundaryCurve curve = boundary_curve(problem, {t}, std::nullopt, cfg.tol_x, sch);
  const double b = curve.bs.front();
  rows.push_back({"boundary b(t)", b, 0.0, "info", true});

  double worst = 0.0;
  double worst_allowed = 0.0;
  bool bellman_ok = true;
  for (double dxp : {-1.5, -1.0, -0.5, -0.25, 0.5}) {
    const BellmanResidual r = bellman_residual(problem, t, b + dxp, sch);
    const double allowed = 2.0 * r.err_est + 1e-12;
    if (r.residual > allowed) bellman_ok = false;
    if (r.residual - allowed >= worst - worst_allowed) {
      worst = r.residual;
      worst_allowed = allowed;
    }
  }
  rows.push_back({"bellman residual", worst, worst_allowed, "<=", bellman_ok});

  if (problem.gain().convex_in_x()) {
    const double h = problem.jumps().step();
    const double right_end = b + problem.jumps().xi_star().to_double() + h;
    const ValueSlice conv = value_slice(problem, t, right_end - 3.0, right_end,
                                        static_cast<std::size_t>(cfg.slice_points), sch);
    const ConvexityReport cr = convexity_check(problem, conv, curve);
    rows.push_back(at_most("convexity violations", static_cast<double>(cr.violations), 0.0));
  } else {
    rows.push_back({"convexity (gain not convex)", 0.0, 0.0, "skipped", true});
  }

  const SmoothFit sf = smooth_fit_check(problem, curve, t, cfg.delta, sch);
  const double slope_tol = 2.0 * sf.err_est / sf.delta + 2.0 * cfg.tol_x / sf.delta;
  const double g_right = problem.gain().dx(t, b);
  rows.push_back(at_most("right slope - g_x at b", std::abs(sf.right_slope - g_right), slope_tol));
  const GainFamily fam = problem.gain().family();
  if (fam == GainFamily::chow_robbins) {
    rows.push_back(at_most("left slope at b", sf.left_slope, 1.0 / (t + 1.0) + slope_tol));
    rows.push_back(at_least("smooth-fit gap", sf.gap(), 1.0 / t - 1.0 / (t + 1.0) - 2.0 * slope_tol));
  } else if (fam == GainFamily::sqrt_threshold) {
    rows.push_back(at_most("|smooth-fit gap|", std::abs(sf.gap()), 0.01));
  } else {
    rows.push_back(at_least("smooth-fit gap", sf.gap(), -2.0 * slope_tol));
  }

  const double x_mc = b - 1.0;
  const ValueEstimate v = value_at(problem, t, x_mc, sch);
  const LatticePolicy pol = lattice_policy(problem, t, x_mc, cfg.mc_cap, sch);
  const McResult mc = simulate_value(problem, pol.curve, t, x_mc, cfg.mc_paths, cfg.mc_cap,
                                     cfg.seed, pol.truncation());
  // The simulated rule stops once V - g <= tol_v, which can give up at most
  // tol_v against the optimum.
  rows.push_back(at_most("|MC mean - V| at b-1", std::abs(mc.mean - v.value),
                         4.0 * mc.std_error + 10.0 * v.err_est + pol.curve.tol_v + 1e-12));

  if (fam == GainFamily::dist_to_integer) {
    const ValueSlice s = value_slice(problem, t, -2.0, 2.0, 401, sch);
    double dev = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = s.x(i);
      const double d = std::min(std::ceil(x) - x, x - std::floor(x));
      const double closed = x <= 0.0 ? std::max(-d * d, -x * x) : -d * d;
      dev = std::max(dev, std::abs(s.values[i] - closed));
    }
    rows.push_back(at_most("max |V - closed form|", dev, 1e-6));
    rows.push_back(at_most("|b + 1/2|", std::abs(b + 0.5), 1e-4));
  }
  if (fam == GainFamily::sqrt_threshold) {
    const ValueSlice s = value_slice(problem, t, std::sqrt(t), std::sqrt(t) + 2.0, 101, sch);
    double dev = 0.0;
    for (double val : s.values) dev = std::max(dev, std::abs(val));
    rows.push_back(at_most("max |V| above sqrt(t)", dev, 1e-12));
  }
  return rows;
}

}  // namespace stopbound
