#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stopbound/curve.hpp"
#include "stopbound/detail/special.hpp"
#include "stopbound/errors.hpp"
#include "stopbound/rational.hpp"

namespace stopbound {

struct JumpAtom {
  Rational value;
  Rational prob;
};

// Finitely supported step law of the walk. Every atom value is an integer
// multiple of the lattice step h, so the states reachable from x are exactly
// x + h * Z and the walk can be run on integer indices.
class JumpDistribution {
 public:
  static JumpDistribution make(std::vector<JumpAtom> atoms);

  const std::vector<JumpAtom>& atoms() const noexcept { return atoms_; }
  const Rational& h() const noexcept { return h_; }
  const std::vector<std::int64_t>& int_jumps() const noexcept { return int_jumps_; }
  const Rational& xi_star() const noexcept { return atoms_.back().value; }
  const Rational& mean() const noexcept { return mean_; }
  const Rational& variance() const noexcept { return variance_; }

  const std::vector<double>& probs() const noexcept { return probs_; }
  double step() const noexcept { return step_; }
  std::int64_t min_jump() const noexcept { return int_jumps_.front(); }
  std::int64_t max_jump() const noexcept { return int_jumps_.back(); }
  std::size_t size() const noexcept { return atoms_.size(); }

  // sup over lambda > 0 of 2 log E[exp(lambda xi)] / lambda^2, checked on a
  // dense log-spaced grid. Infinite when the mean is positive.
  double variance_proxy() const;

  friend bool operator==(const JumpDistribution& a, const JumpDistribution& b) {
    if (a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t i = 0; i < a.atoms_.size(); ++i) {
      if (a.atoms_[i].value != b.atoms_[i].value || a.atoms_[i].prob != b.atoms_[i].prob) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<JumpAtom> atoms_;
  Rational h_;
  std::vector<std::int64_t> int_jumps_;
  Rational mean_;
  Rational variance_;
  std::vector<double> probs_;
  double step_ = 1.0;
};

inline JumpDistribution JumpDistribution::make(std::vector<JumpAtom> atoms) {
  if (atoms.empty()) throw InputError("jump distribution needs at least one atom");
  std::sort(atoms.begin(), atoms.end(),
            [](const JumpAtom& a, const JumpAtom& b) { return a.value < b.value; });
  Rational total(0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].prob <= Rational(0)) {
      throw ProbSumError("atom " + atoms[i].value.to_string() + " has non-positive probability " +
                         atoms[i].prob.to_string());
    }
    if (atoms[i].value == Rational(0)) throw InputError("jump value 0 is not allowed");
    if (i > 0 && atoms[i].value == atoms[i - 1].value) {
      throw DuplicateAtomError("duplicate jump value " + atoms[i].value.to_string());
    }
    total += atoms[i].prob;
  }
  if (total != Rational(1)) {
    throw ProbSumError("probabilities sum to " + total.to_string() + ", not 1");
  }
  if (atoms.front().value > Rational(0) || atoms.back().value < Rational(0)) {
    throw SignError("the walk needs both a negative and a positive jump");
  }

  JumpDistribution d;
  d.atoms_ = std::move(atoms);
  d.h_ = Rational(0);
  for (const auto& a : d.atoms_) d.h_ = rational_gcd(d.h_, a.value);
  d.mean_ = Rational(0);
  Rational second(0);
  for (const auto& a : d.atoms_) {
    const Rational q = a.value / d.h_;
    d.int_jumps_.push_back(q.num());
    d.mean_ += a.prob * a.value;
    second += a.prob * a.value * a.value;
    d.probs_.push_back(a.prob.to_double());
  }
  d.variance_ = second - d.mean_ * d.mean_;
  d.step_ = d.h_.to_double();
  return d;
}

inline double JumpDistribution::variance_proxy() const {
  if (mean_ > Rational(0)) return std::numeric_limits<double>::infinity();
  double best = variance_.to_double();
  for (int k = 0; k <= 4000; ++k) {
    const double lambda = std::pow(10.0, -4.0 + 7.0 * k / 4000.0);
    // log E[exp(lambda xi)] via a shifted log-sum-exp to stay finite.
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms_) top = std::max(top, lambda * a.value.to_double());
    double s = 0.0;
    double s_small = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const double z = lambda * atoms_[i].value.to_double();
      s += probs_[i] * std::exp(z - top);
      s_small += probs_[i] * std::expm1(z);
    }
    const double log_mgf = lambda < 1e-2 ? std::log1p(s_small) : top + std::log(s);
    best = std::max(best, 2.0 * log_mgf / (lambda * lambda));
  }
  return best;
}

enum class GainFamily { chow_robbins, dist_to_integer, sqrt_threshold, affine_tilt };

// Reward g(t, x) received on stopping. A closed set of families plus an
// affine tilt g(t, x) + c * x of any of them.
class GainFunction {
 public:
  static GainFunction chow_robbins() { return GainFunction(GainFamily::chow_robbins); }
  static GainFunction dist_to_integer() { return GainFunction(GainFamily::dist_to_integer); }
  static GainFunction sqrt_threshold() { return GainFunction(GainFamily::sqrt_threshold); }
  static GainFunction affine_tilt(GainFunction base, Rational c) {
    GainFunction g(GainFamily::affine_tilt);
    g.tilt_ = c;
    g.tilt_d_ = c.to_double();
    g.base_ = std::make_shared<const GainFunction>(std::move(base));
    return g;
  }

  GainFamily family() const noexcept { return family_; }
  const Rational& tilt() const noexcept { return tilt_; }
  const GainFunction* base() const noexcept { return base_.get(); }

  std::string name() const {
    switch (family_) {
      case GainFamily::chow_robbins: return "chow_robbins";
      case GainFamily::dist_to_integer: return "dist_to_integer";
      case GainFamily::sqrt_threshold: return "sqrt_threshold";
      case GainFamily::affine_tilt: return "affine_tilt";
    }
    return "?";
  }

  // Whether g(t, .) is defined at time t.
  bool in_domain(double t) const noexcept {
    switch (family_) {
      case GainFamily::chow_robbins: return t > 0.0;
      case GainFamily::dist_to_integer: return std::isfinite(t);
      case GainFamily::sqrt_threshold: return t >= 0.0;
      case GainFamily::affine_tilt: return base_->in_domain(t);
    }
    return false;
  }

  double operator()(double t, double x) const noexcept {
    switch (family_) {
      case GainFamily::chow_robbins: return x / t;
      case GainFamily::dist_to_integer: {
        if (x <= 0.0) return -x * x;
        const double d = std::min(std::ceil(x) - x, x - std::floor(x));
        return -d * d;
      }
      case GainFamily::sqrt_threshold: {
        const double u = std::max(std::sqrt(t) - x, 0.0);
        return -u * u * u;
      }
      case GainFamily::affine_tilt: return (*base_)(t, x) + tilt_d_ * x;
    }
    return 0.0;
  }

  // out[k] = g(t, x0 + (i0 + k) * h) for k < out.size(), with the family
  // dispatch hoisted out of the loop.
  void fill_row(double t, double x0, double h, std::int64_t i0, std::span<double> out) const {
    const auto n = out.size();
    auto x_of = [&](std::size_t k) { return x0 + static_cast<double>(i0 + static_cast<std::int64_t>(k)) * h; };
    switch (family_) {
      case GainFamily::chow_robbins: {
        const double inv = 1.0 / t;
        for (std::size_t k = 0; k < n; ++k) out[k] = x_of(k) * inv;
        return;
      }
      default:
        for (std::size_t k = 0; k < n; ++k) out[k] = (*this)(t, x_of(k));
        return;
    }
  }

  // Partial derivative in x. On the exceptional set the right derivative is
  // returned.
  double dx(double t, double x) const noexcept {
    switch (family_) {
      case GainFamily::chow_robbins: return 1.0 / t;
      case GainFamily::dist_to_integer: {
        if (x < 0.0) return -2.0 * x;
        const double frac = x - std::floor(x);
        return frac < 0.5 ? -2.0 * frac : 2.0 * (1.0 - frac);
      }
      case GainFamily::sqrt_threshold: {
        const double u = std::max(std::sqrt(t) - x, 0.0);
        return 3.0 * u * u;
      }
      case GainFamily::affine_tilt: return base_->dx(t, x) + tilt_d_;
    }
    return 0.0;
  }

  // False on the declared exceptional set where dx does not exist.
  bool differentiable_at(double x) const noexcept {
    switch (family_) {
      case GainFamily::dist_to_integer: {
        if (x <= 0.0) return true;
        const double twice = 2.0 * x;
        return twice != std::round(twice);
      }
      case GainFamily::affine_tilt: return base_->differentiable_at(x);
      default: return true;
    }
  }

  // g(t, .) convex on the whole line.
  bool convex_in_x() const noexcept {
    switch (family_) {
      case GainFamily::chow_robbins: return true;
      case GainFamily::affine_tilt: return base_->convex_in_x();
      default: return false;
    }
  }

 private:
  explicit GainFunction(GainFamily f) : family_(f) {}

  GainFamily family_;
  Rational tilt_{0};
  double tilt_d_ = 0.0;
  std::shared_ptr<const GainFunction> base_;
};

enum class MajorantKind { none, exponential_mixture, lattice_supremum };

// An excessive majorant U of the gain: U >= g and U(t, x) >= E U(t+1, x+xi).
// Used as an optional terminal layer so that finite-horizon values approach
// V from above.
//
//  - exponential_mixture (gain x/t only): s2 * m(s2 t, x) where m is the
//    exponential mixture in detail/special.hpp and s2 the variance proxy of
//    the jumps. Each exponential exp(l x - l^2 s2 t / 2) is a supermartingale
//    under the walk because E exp(l xi) <= exp(l^2 s2 / 2) for l > 0.
//  - lattice_supremum: sup of g over all later times and over the lattice
//    x + hZ. Constant along paths, so trivially excessive.
struct Majorant {
  MajorantKind kind = MajorantKind::none;
  double variance_proxy = 1.0;

  static std::string name(MajorantKind k) {
    switch (k) {
      case MajorantKind::none: return "none";
      case MajorantKind::exponential_mixture: return "exponential_mixture";
      case MajorantKind::lattice_supremum: return "lattice_supremum";
    }
    return "?";
  }
};

class ProblemSpec {
 public:
  ProblemSpec(std::string name, JumpDistribution jumps, GainFunction gain, Rational t_min,
              Majorant majorant = {})
      : name_(std::move(name)),
        jumps_(std::move(jumps)),
        gain_(std::move(gain)),
        t_min_(t_min),
        majorant_(majorant) {
    if (t_min_ <= Rational(0)) throw InputError("t_min must be positive");
    if (!gain_.in_domain(t_min_.to_double())) {
      throw DomainError("gain " + gain_.name() + " is undefined at t_min = " + t_min_.to_string());
    }
    validate_majorant();
  }

  // Picks the tightest majorant this library can justify for (jumps, gain),
  // or none.
  static Majorant automatic_majorant(const JumpDistribution& jumps, const GainFunction& gain) {
    switch (gain.family()) {
      case GainFamily::chow_robbins: {
        const double s2 = jumps.variance_proxy();
        if (!std::isfinite(s2)) return {};
        return {MajorantKind::exponential_mixture, s2};
      }
      case GainFamily::dist_to_integer:
      case GainFamily::sqrt_threshold:
        return {MajorantKind::lattice_supremum, 1.0};
      case GainFamily::affine_tilt:
        return {};
    }
    return {};
  }

  const std::string& name() const noexcept { return name_; }
  const JumpDistribution& jumps() const noexcept { return jumps_; }
  const GainFunction& gain() const noexcept { return gain_; }
  const Rational& t_min() const noexcept { return t_min_; }
  const Majorant& majorant() const noexcept { return majorant_; }
  bool has_majorant() const noexcept { return majorant_.kind != MajorantKind::none; }

  double g(double t, double x) const noexcept { return gain_(t, x); }

  double majorant_value(double t, double x) const {
    switch (majorant_.kind) {
      case MajorantKind::none: return g(t, x);
      case MajorantKind::exponential_mixture: {
        const double s2 = majorant_.variance_proxy;
        return std::max(g(t, x), s2 * detail::exponential_mixture(s2 * t, x));
      }
      case MajorantKind::lattice_supremum: {
        if (gain_.family() == GainFamily::sqrt_threshold) return 0.0;
        // dist_to_integer: the lattice x + hZ, h = p/q, meets the points
        // x + Z/q modulo 1, so the best reachable distance to Z is the
        // distance from x to (1/q)Z.
        const double q = static_cast<double>(jumps_.h().den());
        const double y = x * q;
        const double d = std::abs(y - std::round(y)) / q;
        return -d * d;
      }
    }
    return g(t, x);
  }

 private:
  void validate_majorant() const {
    switch (majorant_.kind) {
      case MajorantKind::none: return;
      case MajorantKind::exponential_mixture:
        if (gain_.family() != GainFamily::chow_robbins) {
          throw InputError("exponential_mixture majorant requires the chow_robbins gain");
        }
        if (!(majorant_.variance_proxy >= jumps_.variance_proxy() * (1.0 - 1e-12))) {
          throw InputError("majorant variance proxy is below the jump law's");
        }
        return;
      case MajorantKind::lattice_supremum:
        if (gain_.family() != GainFamily::dist_to_integer &&
            gain_.family() != GainFamily::sqrt_threshold) {
          throw InputError("lattice_supremum majorant is only available for dist_to_integer "
                           "and sqrt_threshold gains");
        }
        return;
    }
  }

  std::string name_;
  JumpDistribution jumps_;
  GainFunction gain_;
  Rational t_min_;
  Majorant majorant_;
};

inline JumpDistribution symmetric_bernoulli() {
  return JumpDistribution::make({{Rational(-1), Rational(1, 2)}, {Rational(1), Rational(1, 2)}});
}

inline JumpDistribution three_jump_distribution() {
  return JumpDistribution::make({{Rational(-3, 2), Rational(24, 85)},
                                 {Rational(1, 5), Rational(25, 68)},
                                 {Rational(1), Rational(7, 20)}});
}

inline std::vector<std::string> preset_names() {
  return {"chow_robbins", "three_jump", "sqrt_threshold", "dist_to_integer"};
}

// The four worked examples as ready-made problems.
inline ProblemSpec preset(const std::string& name) {
  auto build = [&](JumpDistribution jumps, GainFunction gain) {
    Majorant m = ProblemSpec::automatic_majorant(jumps, gain);
    return ProblemSpec(name, std::move(jumps), std::move(gain), Rational(1), m);
  };
  if (name == "chow_robbins") return build(symmetric_bernoulli(), GainFunction::chow_robbins());
  if (name == "three_jump") return build(three_jump_distribution(), GainFunction::chow_robbins());
  if (name == "sqrt_threshold") return build(symmetric_bernoulli(), GainFunction::sqrt_threshold());
  if (name == "dist_to_integer") {
    return build(symmetric_bernoulli(), GainFunction::dist_to_integer());
  }
  throw InputError("unknown preset \"" + name + "\"");
}

enum class Region { continuation, stopping };

inline const char* region_name(Region r) {
  return r == Region::stopping ? "stopping" : "continuation";
}

// Stopping iff x >= b(t) - tol_x, b interpolated linearly between grid times.
inline Region classify_point(const ProblemSpec& problem, const BoundaryCurve& boundary, double t,
                             double x) {
  if (!problem.gain().in_domain(t)) throw DomainError("t outside the gain's domain");
  const double b = boundary.at(t);
  return x >= b - boundary.tol_x ? Region::stopping : Region::continuation;
}

}  // namespace stopbound
