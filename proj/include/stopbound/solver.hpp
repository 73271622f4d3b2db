#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stopbound/errors.hpp"
#include "stopbound/model.hpp"
#include "stopbound/parallel.hpp"

namespace stopbound {

// Inclusive range of lattice indices i, standing for states x_anchor + i*h.
struct LatticeWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t size() const noexcept { return hi - lo + 1; }
};

// Terminal layer of the finite-horizon recursion.
//   gain:      V_T = g, so V_T increases to V (stop no later than T).
//   majorant:  V_T = U for the problem's excessive majorant, so V_T
//              decreases to V.
//   automatic: majorant when the problem declares one, else gain.
enum class Terminal { gain, majorant, automatic };

struct DpOptions {
  Terminal terminal = Terminal::gain;
  // States whose distance from the window exceeds the Hoeffding radius for
  // this tail mass are not propagated; they take the terminal value instead,
  // which keeps lower (gain) and upper (majorant) runs on their side of V.
  // 0 runs the full forward cone.
  double tail_mass = 1e-18;
};

struct HorizonSchedule {
  std::int64_t T_start = 64;
  int max_doublings = 12;
  double tol = 1e-6;
  Terminal terminal = Terminal::automatic;
  double tail_mass = 1e-18;
};

namespace detail {

inline Terminal resolve(const ProblemSpec& p, Terminal t) {
  if (t == Terminal::automatic) return p.has_majorant() ? Terminal::majorant : Terminal::gain;
  if (t == Terminal::majorant && !p.has_majorant()) {
    throw DomainError("problem " + p.name() + " declares no majorant");
  }
  return t;
}

// Half-width, in lattice units, of the band holding all but `tail` of the
// mass of an n-step walk around its drift (Hoeffding).
inline std::int64_t band_radius(const JumpDistribution& jumps, std::int64_t n, double tail) {
  const double span = static_cast<double>(jumps.max_jump() - jumps.min_jump());
  const double r = span * std::sqrt(static_cast<double>(n) * std::log(2.0 / tail) / 2.0);
  return static_cast<std::int64_t>(std::ceil(r)) + 1;
}

struct Layer {
  std::int64_t n;
  std::int64_t lo;
  std::span<const double> values;
};

using LayerVisitor = std::function<void(const Layer&)>;

// Backward induction from layer T down to layer 0 on the lattice of
// x_anchor. Calls `visit` on every layer (T first) when given.
inline std::vector<double> backward_induction(const ProblemSpec& problem, double t0,
                                              double x_anchor, LatticeWindow window,
                                              std::int64_t T, const DpOptions& opt,
                                              const LayerVisitor& visit = {}) {
  if (T < 0) throw InputError("horizon must be non-negative");
  if (window.hi < window.lo) throw InputError("empty lattice window");
  if (!problem.gain().in_domain(t0)) {
    throw DomainError("gain " + problem.gain().name() + " undefined at t = " + std::to_string(t0));
  }
  const Terminal terminal = resolve(problem, opt.terminal);
  const JumpDistribution& jumps = problem.jumps();
  const double h = jumps.step();
  const auto& J = jumps.int_jumps();
  const auto& P = jumps.probs();
  const std::int64_t jmin = jumps.min_jump();
  const std::int64_t jmax = jumps.max_jump();
  double drift = 0.0;
  for (std::size_t k = 0; k < J.size(); ++k) drift += P[k] * static_cast<double>(J[k]);

  const bool pruned = opt.tail_mass > 0.0;
  auto lo_at = [&](std::int64_t n) {
    std::int64_t lo = window.lo + n * jmin;
    if (pruned) {
      const auto c = static_cast<std::int64_t>(std::floor(static_cast<double>(window.lo) +
                                                          drift * static_cast<double>(n)));
      lo = std::max(lo, c - band_radius(jumps, n, opt.tail_mass));
    }
    return lo;
  };
  auto hi_at = [&](std::int64_t n) {
    std::int64_t hi = window.hi + n * jmax;
    if (pruned) {
      const auto c = static_cast<std::int64_t>(std::ceil(static_cast<double>(window.hi) +
                                                         drift * static_cast<double>(n)));
      hi = std::min(hi, c + band_radius(jumps, n, opt.tail_mass));
    }
    return hi;
  };
  auto terminal_value = [&](double t, std::int64_t i) {
    const double x = x_anchor + static_cast<double>(i) * h;
    const double v = terminal == Terminal::majorant ? problem.majorant_value(t, x) : problem.g(t, x);
    if (!std::isfinite(v)) {
      throw DomainError("terminal value not finite at (t, x) = (" + std::to_string(t) + ", " +
                        std::to_string(x) + ")");
    }
    return v;
  };

  std::int64_t cur_lo = lo_at(T);
  std::int64_t cur_hi = hi_at(T);
  std::vector<double> cur(static_cast<std::size_t>(cur_hi - cur_lo + 1));
  {
    const double tT = t0 + static_cast<double>(T);
    for (std::int64_t i = cur_lo; i <= cur_hi; ++i) {
      cur[static_cast<std::size_t>(i - cur_lo)] = terminal_value(tT, i);
    }
  }
  if (visit) visit({T, cur_lo, cur});

  std::vector<double> ext;
  std::vector<double> next;
  std::vector<double> gains;
  std::vector<std::ptrdiff_t> offsets(J.size());
  for (std::size_t k = 0; k < J.size(); ++k) offsets[k] = J[k] - jmin;
  // out[i] = sum_k P[k] * in[i + offsets[k]]; two- and three-atom laws get
  // a single fused pass.
  auto expectation = [&](const double* in, std::size_t m, double* out) {
    if (J.size() == 2) {
      const double p0 = P[0], p1 = P[1];
      const double* a = in + offsets[0];
      const double* b = in + offsets[1];
      for (std::size_t i = 0; i < m; ++i) out[i] = p0 * a[i] + p1 * b[i];
      return;
    }
    if (J.size() == 3) {
      const double p0 = P[0], p1 = P[1], p2 = P[2];
      const double* a = in + offsets[0];
      const double* b = in + offsets[1];
      const double* c = in + offsets[2];
      for (std::size_t i = 0; i < m; ++i) out[i] = p0 * a[i] + p1 * b[i] + p2 * c[i];
      return;
    }
    std::fill(out, out + m, 0.0);
    for (std::size_t k = 0; k < J.size(); ++k) {
      const double p = P[k];
      const double* a = in + offsets[k];
      for (std::size_t i = 0; i < m; ++i) out[i] += p * a[i];
    }
  };
  for (std::int64_t n = T - 1; n >= 0; --n) {
    const double t_next = t0 + static_cast<double>(n + 1);
    const double t_now = t0 + static_cast<double>(n);
    const std::int64_t lo = lo_at(n);
    const std::int64_t hi = hi_at(n);
    const std::int64_t ext_lo = lo + jmin;
    const std::int64_t ext_hi = hi + jmax;

    // Layer n+1 as read by layer n. Reads that fall outside the computed
    // band take the terminal value; copy only when that happens.
    const double* src = nullptr;
    if (ext_lo >= cur_lo && ext_hi <= cur_hi) {
      src = cur.data() + (ext_lo - cur_lo);
    } else {
      ext.resize(static_cast<std::size_t>(ext_hi - ext_lo + 1));
      for (std::int64_t i = ext_lo; i <= ext_hi; ++i) {
        ext[static_cast<std::size_t>(i - ext_lo)] =
            (i >= cur_lo && i <= cur_hi) ? cur[static_cast<std::size_t>(i - cur_lo)]
                                         : terminal_value(t_next, i);
      }
      src = ext.data();
    }

    const std::size_t m = static_cast<std::size_t>(hi - lo + 1);
    next.resize(m);
    gains.resize(m);
    problem.gain().fill_row(t_now, x_anchor, h, lo, gains);
    expectation(src, m, next.data());
    // Ties stop: the stopping value wins when equal.
    for (std::size_t i = 0; i < m; ++i) next[i] = gains[i] >= next[i] ? gains[i] : next[i];
    cur.swap(next);
    cur_lo = lo;
    cur_hi = hi;
    if (visit) visit({n, cur_lo, cur});
  }
  return {cur.begin() + (window.lo - cur_lo), cur.begin() + (window.hi - cur_lo + 1)};
}

}  // namespace detail

// V_T(t0, x_anchor + i*h) for i in the window: the value of the problem
// restricted to stopping no later than T steps, computed exactly on the
// lattice by V_n = max(g, E V_{n+1}(. + xi)).
inline std::vector<double> finite_horizon_value(const ProblemSpec& problem, double t0,
                                                double x_anchor, LatticeWindow window,
                                                std::int64_t T, const DpOptions& opt = {}) {
  return detail::backward_induction(problem, t0, x_anchor, window, T, opt);
}

struct ValueEstimate {
  double value = 0.0;
  double err_est = 0.0;
  std::int64_t T_used = 0;
};

struct WindowEstimate {
  std::vector<double> values;
  double err_est = 0.0;  // max over the window
  std::int64_t T_used = 0;
};

// Horizon doubling on a whole window: V_T, V_2T, ... until the largest
// change over the window is at most schedule.tol. err_est is that change,
// an estimate rather than a bound.
inline WindowEstimate value_window(const ProblemSpec& problem, double t, double x_anchor,
                                   LatticeWindow window, const HorizonSchedule& schedule) {
  if (schedule.T_start < 1) throw InputError("T_start must be at least 1");
  if (schedule.max_doublings < 1) throw InputError("max_doublings must be at least 1");
  if (!(schedule.tol > 0.0)) throw InputError("tolerance must be positive");
  if (t < problem.t_min().to_double()) {
    throw DomainError("t = " + std::to_string(t) + " is below t_min = " +
                      problem.t_min().to_string());
  }
  const DpOptions opt{detail::resolve(problem, schedule.terminal), schedule.tail_mass};
  std::int64_t T = schedule.T_start;
  std::vector<double> prev = finite_horizon_value(problem, t, x_anchor, window, T, opt);
  double err = std::numeric_limits<double>::infinity();
  for (int d = 0; d < schedule.max_doublings; ++d) {
    T *= 2;
    std::vector<double> cur = finite_horizon_value(problem, t, x_anchor, window, T, opt);
    err = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) err = std::max(err, std::abs(cur[i] - prev[i]));
    if (err <= schedule.tol) return {std::move(cur), err, T};
    prev = std::move(cur);
  }
  throw NoConvergenceError("no convergence at (t, x) = (" + std::to_string(t) + ", " +
                               std::to_string(x_anchor) + "): err_est " + std::to_string(err) +
                               " > tol " + std::to_string(schedule.tol) + " at T = " +
                               std::to_string(T),
                           prev.front(), err, T);
}

inline ValueEstimate value_at(const ProblemSpec& problem, double t, double x,
                              const HorizonSchedule& schedule = {}) {
  WindowEstimate w = value_window(problem, t, x, {0, 0}, schedule);
  return {w.values.front(), w.err_est, w.T_used};
}

// Certified bracket lower <= V(t, x) <= upper at horizon T (requires a
// majorant). Pruning keeps each side valid.
struct ValueBounds {
  double lower = 0.0;
  double upper = 0.0;
  double width() const noexcept { return upper - lower; }
};

inline ValueBounds value_bounds(const ProblemSpec& problem, double t, double x, std::int64_t T,
                                double tail_mass = 1e-18) {
  const double lo =
      finite_horizon_value(problem, t, x, {0, 0}, T, {Terminal::gain, tail_mass}).front();
  const double up =
      finite_horizon_value(problem, t, x, {0, 0}, T, {Terminal::majorant, tail_mass}).front();
  return {lo, up};
}

struct ValueSlice {
  double t0 = 0.0;
  double x0 = 0.0;
  double dx = 0.0;
  std::vector<double> values;  // values[i] ~ V(t0, x0 + i*dx)
  std::vector<double> gains;   // g(t0, x0 + i*dx)
  std::int64_t horizon = 0;    // largest T used
  double err_est = 0.0;        // max over points
  std::string problem_id;

  std::size_t size() const noexcept { return values.size(); }
  double x(std::size_t i) const noexcept { return x0 + static_cast<double>(i) * dx; }
};

namespace detail {

// Groups grid indices whose points lie on a common lattice x + hZ.
inline std::vector<std::vector<std::size_t>> residue_groups(double dx, double h,
                                                            std::size_t n) {
  std::map<std::int64_t, std::vector<std::size_t>> by_key;
  constexpr double kScale = 1e9;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) * dx / h;
    auto key = static_cast<std::int64_t>(std::llround((u - std::floor(u)) * kScale));
    if (key >= static_cast<std::int64_t>(kScale)) key -= static_cast<std::int64_t>(kScale);
    by_key[key].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(by_key.size());
  for (auto& [k, idx] : by_key) groups.push_back(std::move(idx));
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

}  // namespace detail

// V(t, .) on n_points equally spaced points of [x_min, x_max]. Points that
// share a lattice are solved in one window; distinct lattices are solved
// independently (and concurrently when STOPBOUND_THREADS allows).
inline ValueSlice value_slice(const ProblemSpec& problem, double t, double x_min, double x_max,
                              std::size_t n_points, const HorizonSchedule& schedule = {}) {
  if (!(x_min < x_max)) throw InputError("value_slice needs x_min < x_max");
  if (n_points < 2) throw InputError("value_slice needs at least two points");
  ValueSlice s;
  s.t0 = t;
  s.x0 = x_min;
  s.dx = (x_max - x_min) / static_cast<double>(n_points - 1);
  s.values.assign(n_points, 0.0);
  s.gains.resize(n_points);
  s.problem_id = problem.name();
  for (std::size_t i = 0; i < n_points; ++i) s.gains[i] = problem.g(t, s.x(i));

  const double h = problem.jumps().step();
  const auto groups = detail::residue_groups(s.dx, h, n_points);
  std::vector<double> errs(groups.size(), 0.0);
  std::vector<std::int64_t> horizons(groups.size(), 0);
  parallel_for(groups.size(), [&](std::size_t gi) {
    const auto& idx = groups[gi];
    const double anchor = s.x(idx.front());
    std::vector<std::int64_t> offs(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      offs[k] = std::llround((s.x(idx[k]) - anchor) / h);
    }
    const LatticeWindow w{0, offs.back()};
    WindowEstimate est = value_window(problem, t, anchor, w, schedule);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      s.values[idx[k]] = est.values[static_cast<std::size_t>(offs[k])];
    }
    errs[gi] = est.err_est;
    horizons[gi] = est.T_used;
  });
  s.err_est = *std::max_element(errs.begin(), errs.end());
  s.horizon = *std::max_element(horizons.begin(), horizons.end());
  return s;
}

struct BellmanResidual {
  double residual = 0.0;  // |V - max(g, E V(t+1, x + xi))|
  double err_est = 0.0;   // largest err_est among the values involved
};

// One-step consistency of independently computed values.
inline BellmanResidual bellman_residual(const ProblemSpec& problem, double t, double x,
                                        const HorizonSchedule& schedule = {}) {
  const ValueEstimate here = value_at(problem, t, x, schedule);
  const auto& atoms = problem.jumps().atoms();
  const auto& probs = problem.jumps().probs();
  double cont = 0.0;
  double err = here.err_est;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const ValueEstimate v =
        value_at(problem, t + 1.0, x + atoms[k].value.to_double(), schedule);
    cont += probs[k] * v.value;
    err = std::max(err, v.err_est);
  }
  return {std::abs(here.value - std::max(problem.g(t, x), cont)), err};
}

}  // namespace stopbound
