#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stopbound/boundary.hpp"
#include "stopbound/curve.hpp"
#include "stopbound/errors.hpp"
#include "stopbound/model.hpp"
#include "stopbound/solver.hpp"

namespace stopbound {

enum class KinkSource { detected, predicted, both };

inline const char* kink_source_name(KinkSource s) {
  switch (s) {
    case KinkSource::detected: return "detected";
    case KinkSource::predicted: return "predicted";
    case KinkSource::both: return "both";
  }
  return "?";
}

struct KinkPoint {
  double x = 0.0;
  std::optional<double> left_slope;
  std::optional<double> right_slope;
  std::optional<double> gap;  // right - left
  KinkSource source = KinkSource::detected;
  std::optional<std::int64_t> m;       // steps until the exact hit (predicted)
  std::optional<double> hit_prob;      // probability of the exact-hit event
  std::optional<double> expected_gap;  // hit_prob * smooth-fit gap at t + m
};

struct Slopes {
  double left = 0.0;
  double right = 0.0;
  double gap() const noexcept { return right - left; }
};

inline Slopes one_sided_slopes(const ValueSlice& slice, std::size_t i) {
  if (i < 1 || i + 1 >= slice.size()) {
    throw IndexError("one_sided_slopes needs an interior index, got " + std::to_string(i) +
                     " for a slice of " + std::to_string(slice.size()) + " points");
  }
  return {(slice.values[i] - slice.values[i - 1]) / slice.dx,
          (slice.values[i + 1] - slice.values[i]) / slice.dx};
}

// Smallest slope gap distinguishable from value error: 4 err_est / dx plus
// a rounding allowance proportional to the slice's magnitude.
inline double noise_floor(const ValueSlice& slice) {
  double vmax = 0.0;
  for (double v : slice.values) vmax = std::max(vmax, std::abs(v));
  return (4.0 * slice.err_est + 64.0 * std::numeric_limits<double>::epsilon() * vmax) / slice.dx;
}

// Kinks of V(t, .) from grid slopes. A kink between two nodes shows up as
// slope gaps split over both of them, so adjacent nodes are merged: every
// node with gap above gap_tol / 2 seeds a cluster that also takes in its
// neighbours with positive gap. A cluster is reported when its total gap
// (right slope after it minus left slope before it) exceeds gap_tol, at the
// gap-weighted mean position, which is exact for an isolated kink.
inline std::vector<KinkPoint> detect_kinks(const ValueSlice& slice, double gap_tol) {
  const double floor = noise_floor(slice);
  if (!(gap_tol >= floor) || !(gap_tol > 0.0)) {
    throw NoiseFloorError("gap_tol " + std::to_string(gap_tol) +
                              " is below the slice noise floor 4*err_est/dx = " +
                              std::to_string(floor),
                          floor);
  }
  std::vector<KinkPoint> out;
  const std::size_t n = slice.size();
  if (n < 3) return out;
  std::vector<double> gaps(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) gaps[i] = one_sided_slopes(slice, i).gap();

  std::vector<char> member(n, 0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (gaps[i] > 0.5 * gap_tol) {
      member[i] = 1;
      if (i > 1 && gaps[i - 1] > 0.0) member[i - 1] = 1;
      if (i + 2 < n && gaps[i + 1] > 0.0) member[i + 1] = 1;
    }
  }
  for (std::size_t i = 1; i + 1 < n;) {
    if (!member[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double sum = 0.0;
    double moment = 0.0;
    while (j + 1 < n && member[j]) {
      sum += gaps[j];
      moment += gaps[j] * slice.x(j);
      ++j;
    }
    if (sum > gap_tol) {
      KinkPoint k;
      k.x = moment / sum;
      k.left_slope = one_sided_slopes(slice, i).left;
      k.right_slope = one_sided_slopes(slice, j - 1).right;
      k.gap = *k.right_slope - *k.left_slope;
      k.source = KinkSource::detected;
      out.push_back(k);
    }
    i = j;
  }
  return out;
}

struct SmoothFit {
  double b = 0.0;
  double right_slope = 0.0;
  double left_slope = 0.0;
  double delta = 0.0;
  double err_est = 0.0;
  double gap() const noexcept { return right_slope - left_slope; }
  double slope_tol() const noexcept { return 2.0 * err_est / delta; }
};

// One-sided slopes of V(t, .) at b(t) from value probes at b - delta, b,
// b + delta.
inline SmoothFit smooth_fit_check(const ProblemSpec& problem, const BoundaryCurve& boundary,
                                  double t, double delta = 1e-3,
                                  const HorizonSchedule& schedule = {}) {
  if (!(delta > 0.0)) throw InputError("delta must be positive");
  SmoothFit s;
  s.b = boundary.at(t);
  s.delta = delta;
  const ValueEstimate lo = value_at(problem, t, s.b - delta, schedule);
  const ValueEstimate mid = value_at(problem, t, s.b, schedule);
  const ValueEstimate hi = value_at(problem, t, s.b + delta, schedule);
  s.left_slope = (mid.value - lo.value) / delta;
  s.right_slope = (hi.value - mid.value) / delta;
  s.err_est = std::max({lo.err_est, mid.err_est, hi.err_est});
  return s;
}

struct PredictOptions {
  // Intermediate states must stay below b(t+n) - margin; negative means
  // 2 * boundary.tol_x.
  double margin = -1.0;
  // Attach expected_gap = hit_prob * (smooth-fit gap at t + m).
  bool expected_gaps = true;
  double delta = 1e-3;
  HorizonSchedule schedule{};
};

namespace detail {

// Integer jump sums reachable in exactly m steps, for m = 1..m_max.
inline std::vector<std::vector<std::int64_t>> reachable_sums(const JumpDistribution& jumps,
                                                             std::int64_t m_max) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> cur{0};
  for (std::int64_t m = 1; m <= m_max; ++m) {
    std::vector<std::int64_t> next;
    for (std::int64_t s : cur) {
      for (std::int64_t j : jumps.int_jumps()) next.push_back(s + j);
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    out.push_back(next);
    cur = std::move(next);
  }
  return out;
}

}  // namespace detail

// Probability that the walk from (t, x) stays strictly below
// b(t + n) - margin for n = 0..m-1 and sits at x + s*h at step m. Forward
// DP over integer offsets.
inline double exact_hit_probability(const JumpDistribution& jumps, const BoundaryCurve& boundary,
                                    double t, double x, std::int64_t m, std::int64_t s,
                                    double margin) {
  const double h = jumps.step();
  const auto& J = jumps.int_jumps();
  const auto& P = jumps.probs();
  std::map<std::int64_t, double> cur{{0, 1.0}};
  for (std::int64_t n = 0; n < m; ++n) {
    const double bn = boundary.at(t + static_cast<double>(n));
    std::map<std::int64_t, double> next;
    for (const auto& [i, p] : cur) {
      if (!(x + static_cast<double>(i) * h < bn - margin)) continue;
      for (std::size_t k = 0; k < J.size(); ++k) next[i + J[k]] += p * P[k];
    }
    cur = std::move(next);
  }
  const auto it = cur.find(s);
  return it == cur.end() ? 0.0 : it->second;
}

// Kinks forced by exact hits: x' = b(t+m) - s*h for every m-step jump sum
// s, kept when x' lies in x_range and some path from x' stays in the
// continuation region for m-1 steps and lands on b(t+m) at step m.
inline std::vector<KinkPoint> predict_kinks(const ProblemSpec& problem,
                                            const BoundaryCurve& boundary, double t,
                                            std::pair<double, double> x_range, std::int64_t m_max,
                                            const PredictOptions& opt = {}) {
  if (m_max < 1) throw InputError("m_max must be at least 1");
  if (!boundary.covers(t, t + static_cast<double>(m_max))) {
    throw BoundaryCoverageError("boundary does not cover [" + std::to_string(t) + ", " +
                                std::to_string(t + static_cast<double>(m_max)) + "]");
  }
  const JumpDistribution& jumps = problem.jumps();
  const double h = jumps.step();
  const double margin = opt.margin >= 0.0 ? opt.margin : 2.0 * boundary.tol_x;
  const auto sums = detail::reachable_sums(jumps, m_max);

  std::vector<KinkPoint> out;
  for (std::int64_t m = 1; m <= m_max; ++m) {
    const double target = boundary.at(t + static_cast<double>(m));
    std::optional<double> fit_gap;
    for (std::int64_t s : sums[static_cast<std::size_t>(m - 1)]) {
      const double xp = target - static_cast<double>(s) * h;
      if (xp < x_range.first || xp > x_range.second) continue;
      const double p = exact_hit_probability(jumps, boundary, t, xp, m, s, margin);
      if (!(p > 0.0)) continue;
      KinkPoint k;
      k.x = xp;
      k.source = KinkSource::predicted;
      k.m = m;
      k.hit_prob = p;
      if (opt.expected_gaps) {
        if (!fit_gap) {
          fit_gap = smooth_fit_check(problem, boundary, t + static_cast<double>(m), opt.delta,
                                     opt.schedule)
                        .gap();
        }
        k.expected_gap = p * *fit_gap;
      }
      out.push_back(k);
    }
  }
  std::sort(out.begin(), out.end(), [](const KinkPoint& a, const KinkPoint& b) {
    return a.x != b.x ? a.x < b.x : *a.m < *b.m;
  });
  return out;
}

struct CrossValidation {
  struct Match {
    KinkPoint predicted;
    std::optional<KinkPoint> detected;
    enum class Status { matched, unmatched, below_floor } status = Status::unmatched;
  };
  std::vector<Match> rows;
  std::vector<KinkPoint> unexplained;  // detected with no prediction nearby

  std::size_t count(Match::Status s) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](const Match& r) { return r.status == s; }));
  }
  bool pass() const { return count(Match::Status::unmatched) == 0; }
};

inline const char* match_status_name(CrossValidation::Match::Status s) {
  switch (s) {
    case CrossValidation::Match::Status::matched: return "matched";
    case CrossValidation::Match::Status::unmatched: return "unmatched";
    case CrossValidation::Match::Status::below_floor: return "below floor";
  }
  return "?";
}

// Pairs each predicted kink with the nearest detected one within match_tol.
// A prediction whose expected_gap does not exceed detection_floor may go
// undetected without counting as a failure.
inline CrossValidation cross_validate(const std::vector<KinkPoint>& predicted,
                                      const std::vector<KinkPoint>& detected, double match_tol,
                                      double detection_floor = 0.0) {
  CrossValidation cv;
  std::vector<char> used(detected.size(), 0);
  for (const KinkPoint& p : predicted) {
    CrossValidation::Match row;
    row.predicted = p;
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < detected.size(); ++j) {
      const double d = std::abs(detected[j].x - p.x);
      if (d <= match_tol && (!best || d < std::abs(detected[*best].x - p.x))) best = j;
    }
    using S = CrossValidation::Match::Status;
    if (best) {
      row.detected = detected[*best];
      row.status = S::matched;
      used[*best] = 1;
    } else if (p.expected_gap && *p.expected_gap <= detection_floor) {
      row.status = S::below_floor;
    } else {
      row.status = S::unmatched;
    }
    cv.rows.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < detected.size(); ++j) {
    if (!used[j]) cv.unexplained.push_back(detected[j]);
  }
  return cv;
}

// Merged kink list for output: predicted rows that matched a detection
// become `both` and carry the detected slopes.
inline std::vector<KinkPoint> merge_kinks(const CrossValidation& cv) {
  std::vector<KinkPoint> out;
  for (const auto& r : cv.rows) {
    KinkPoint k = r.predicted;
    if (r.detected) {
      k.left_slope = r.detected->left_slope;
      k.right_slope = r.detected->right_slope;
      k.gap = r.detected->gap;
      k.source = KinkSource::both;
    }
    out.push_back(k);
  }
  for (const auto& d : cv.unexplained) out.push_back(d);
  std::stable_sort(out.begin(), out.end(),
                   [](const KinkPoint& a, const KinkPoint& b) { return a.x < b.x; });
  return out;
}

struct ConvexityReport {
  double t = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  double max_violation = 0.0;  // largest -(v[i+1] - 2 v[i] + v[i-1]), 0 if none negative
  double threshold = 0.0;      // 4 * err_est plus rounding
  std::size_t violations = 0;
  bool pass = true;
};

// Second differences of the slice must be >= -4 err_est, on a slice that
// ends no later than b(t) + xi* + eps (eps defaults to the lattice step).
inline ConvexityReport convexity_check(const ProblemSpec& problem, const ValueSlice& slice,
                                       const BoundaryCurve& boundary,
                                       std::optional<double> eps = std::nullopt) {
  const double e = eps ? *eps : problem.jumps().step();
  const double limit = boundary.at(slice.t0) + problem.jumps().xi_star().to_double() + e;
  ConvexityReport r;
  r.t = slice.t0;
  r.x_lo = slice.x(0);
  r.x_hi = slice.x(slice.size() - 1);
  if (r.x_hi > limit + 1e-12 * (1.0 + std::abs(limit))) {
    throw RangeError("slice ends at " + std::to_string(r.x_hi) +
                     ", beyond the convexity window b(t) + xi* + eps = " + std::to_string(limit));
  }
  double vmax = 0.0;
  for (double v : slice.values) vmax = std::max(vmax, std::abs(v));
  r.threshold = 4.0 * slice.err_est + 64.0 * std::numeric_limits<double>::epsilon() * vmax;
  for (std::size_t i = 1; i + 1 < slice.size(); ++i) {
    const double d2 = slice.values[i + 1] - 2.0 * slice.values[i] + slice.values[i - 1];
    if (d2 < -r.threshold) ++r.violations;
    r.max_violation = std::max(r.max_violation, -d2);
  }
  r.pass = r.violations == 0;
  return r;
}

}  // namespace stopbound
