#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "stopbound/errors.hpp"

namespace stopbound {

// Stopping boundary b sampled on a strictly increasing time grid. The
// stopping set is {x >= b(t)}.
struct BoundaryCurve {
  std::vector<double> ts;
  std::vector<double> bs;
  double tol_x = 0.0;  // spatial resolution of each b value
  double tol_v = 0.0;  // largest value-gap tolerance used to declare stopping
  std::string problem_id;

  std::size_t size() const noexcept { return ts.size(); }
  double t_front() const { return ts.front(); }
  double t_back() const { return ts.back(); }

  bool covers(double lo, double hi) const noexcept {
    return !ts.empty() && lo >= ts.front() && hi <= ts.back();
  }

  // Piecewise-linear interpolation; exact at grid times.
  double at(double t) const {
    if (ts.empty() || t < ts.front() || t > ts.back()) {
      throw OutOfRangeError("t = " + std::to_string(t) + " outside the boundary's time grid");
    }
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(it - ts.begin());
    if (ts[k] == t) return bs[k];
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return bs[k - 1] + w * (bs[k] - bs[k - 1]);
  }
};

}  // namespace stopbound
