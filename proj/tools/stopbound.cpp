// Command-line front end: slice, boundary, kinks, verify, simulate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stopbound.hpp"

namespace {

using namespace stopbound;

// Decimal, scientific or p/q.
double parse_real(const std::string& text, const std::string& flag) {
  try {
    return Rational::parse(text).to_double();
  } catch (const std::exception&) {
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw InputError(flag + ": not a number: \"" + text + "\"");
  }
  return v;
}

struct Common {
  std::string preset;
  std::string problem_file;
  std::string out = "-";
  std::string tol = "1e-6";
  std::int64_t horizon_start = 64;
  int max_doublings = 14;
  std::uint64_t seed = 1;

  ProblemSpec problem() const {
    if (!preset.empty() && !problem_file.empty()) {
      throw InputError("give either --preset or --problem, not both");
    }
    if (!problem_file.empty()) return load_problem(problem_file);
    if (preset.empty()) throw InputError("one of --preset or --problem is required");
    return stopbound::preset(preset);
  }

  HorizonSchedule schedule() const {
    HorizonSchedule s;
    s.T_start = horizon_start;
    s.max_doublings = max_doublings;
    s.tol = parse_real(tol, "--tol");
    if (!(s.tol > 0.0)) throw InputError("--tol must be positive");
    if (s.T_start < 1) throw InputError("--horizon-start must be at least 1");
    if (s.max_doublings < 1) throw InputError("--max-doublings must be at least 1");
    return s;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--preset", c.preset, "Built-in problem")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--problem", c.problem_file, "Problem file (JSON)");
  cmd->add_option("--out", c.out, "Output path, - for standard output");
  cmd->add_option("--tol", c.tol, "Horizon-doubling tolerance");
  cmd->add_option("--horizon-start", c.horizon_start, "First horizon T");
  cmd->add_option("--max-doublings", c.max_doublings, "Horizon doublings before giving up");
  cmd->add_option("--seed", c.seed, "Random seed");
}

// Buffered so a failed run leaves no partial file.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  std::ostringstream buf;
  write(buf);
  if (path == "-") {
    std::cout << buf.str();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << buf.str();
  if (!f) throw InputError("error writing " + path);
}

std::vector<double> time_grid(double lo, double hi, std::int64_t steps) {
  if (steps < 1) throw InputError("--steps must be at least 1");
  if (!(hi > lo)) throw InputError("--t-max must exceed --t-min");
  std::vector<double> ts(static_cast<std::size_t>(steps + 1));
  for (std::int64_t k = 0; k <= steps; ++k) {
    ts[static_cast<std::size_t>(k)] =
        lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
  }
  ts.back() = hi;
  return ts;
}

std::ostream& report_stream(const std::string& out) { return out == "-" ? std::cerr : std::cout; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal stopping of random walks: values, boundaries, kinks."};
  app.require_subcommand(1);

  // slice
  Common slice_c;
  std::string s_t = "1", s_xmin, s_xmax;
  std::int64_t s_points = 0;
  auto* slice = app.add_subcommand("slice", "V(t, .) on a grid; CSV x,V,g,err_est");
  add_common(slice, slice_c);
  slice->add_option("--t", s_t, "Time");
  slice->add_option("--x-min", s_xmin, "Left end")->required();
  slice->add_option("--x-max", s_xmax, "Right end")->required();
  slice->add_option("--points", s_points, "Number of grid points")->required();

  // boundary
  Common bnd_c;
  std::string b_tmin, b_tmax, b_tilt, b_tolx = "1e-4", b_lo, b_hi, b_scan, b_scan_tol = "0";
  std::int64_t b_steps = 0;
  auto* bnd = app.add_subcommand("boundary", "b(t) on a time grid; CSV t,b[,tilted]");
  add_common(bnd, bnd_c);
  bnd->add_option("--t-min", b_tmin, "First time")->required();
  bnd->add_option("--t-max", b_tmax, "Last time")->required();
  bnd->add_option("--steps", b_steps, "Number of grid intervals")->required();
  bnd->add_option("--tilt", b_tilt, "Add a column b(t) - c t");
  bnd->add_option("--tol-x", b_tolx, "Bisection tolerance in x");
  bnd->add_option("--bracket-lo", b_lo, "Bracket for the first time, lower end");
  bnd->add_option("--bracket-hi", b_hi, "Bracket for the first time, upper end");
  bnd->add_option("--kink-scan", b_scan, "Also write the boundary slope-break scan here");
  bnd->add_option("--slope-gap-tol", b_scan_tol, "Slope-gap threshold for the scan");

  // kinks
  Common k_c;
  std::string k_t = "1", k_xmin = "-2", k_xmax, k_dx = "5e-3", k_gap, k_match = "0.01",
              k_tolx = "1e-5", k_margin;
  std::int64_t k_mmax = 3;
  auto* kinks = app.add_subcommand("kinks", "Detected and predicted kinks of V(t, .)");
  add_common(kinks, k_c);
  kinks->add_option("--t", k_t, "Time");
  kinks->add_option("--x-min", k_xmin, "Left end of the slice");
  kinks->add_option("--x-max", k_xmax, "Right end of the slice (default b(t))");
  kinks->add_option("--dx", k_dx, "Slice spacing");
  kinks->add_option("--m-max", k_mmax, "Largest hitting step count to predict");
  kinks->add_option("--gap-tol", k_gap, "Detection threshold (default twice the noise floor, at least 1e-9)");
  kinks->add_option("--match-tol", k_match, "Distance for matching predictions to detections");
  kinks->add_option("--tol-x", k_tolx, "Boundary bisection tolerance");
  kinks->add_option("--margin", k_margin, "Strictness margin below the boundary");

  // verify
  Common v_c;
  std::string v_t = "1", v_tolx = "1e-5";
  std::int64_t v_paths = 20000, v_cap = 1000;
  auto* verify = app.add_subcommand("verify", "Property checks; prints a pass/fail table");
  add_common(verify, v_c);
  verify->add_option("--t", v_t, "Time");
  verify->add_option("--tol-x", v_tolx, "Boundary bisection tolerance");
  verify->add_option("--paths", v_paths, "Monte Carlo paths");
  verify->add_option("--cap", v_cap, "Monte Carlo horizon cap");

  // simulate
  Common m_c;
  std::string m_t = "1", m_x, m_trunc = "gain";
  std::int64_t m_paths = 100000, m_cap = 1000;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo value of the computed stopping rule");
  add_common(sim, m_c);
  sim->add_option("--t", m_t, "Start time");
  sim->add_option("--x", m_x, "Start position")->required();
  sim->add_option("--paths", m_paths, "Number of paths");
  sim->add_option("--cap", m_cap, "Horizon cap");
  sim->add_option("--truncation", m_trunc, "Value of truncated paths: gain or value")
      ->check(CLI::IsMember({"gain", "value"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*slice) {
      const ProblemSpec p = slice_c.problem();
      if (s_points < 2) throw InputError("--points must be at least 2");
      const ValueSlice s =
          value_slice(p, parse_real(s_t, "--t"), parse_real(s_xmin, "--x-min"),
                      parse_real(s_xmax, "--x-max"), static_cast<std::size_t>(s_points),
                      slice_c.schedule());
      emit(slice_c.out, [&](std::ostream& os) { write_slice_csv(os, s); });
    } else if (*bnd) {
      const ProblemSpec p = bnd_c.problem();
      const auto ts = time_grid(parse_real(b_tmin, "--t-min"), parse_real(b_tmax, "--t-max"), b_steps);
      std::optional<BracketHint> hint;
      if (!b_lo.empty() || !b_hi.empty()) {
        if (b_lo.empty() || b_hi.empty()) throw InputError("give both --bracket-lo and --bracket-hi");
        hint = BracketHint{parse_real(b_lo, "--bracket-lo"), parse_real(b_hi, "--bracket-hi")};
      }
      const double tol_x = parse_real(b_tolx, "--tol-x");
      if (!(tol_x > 0.0)) throw InputError("--tol-x must be positive");
      const BoundaryCurve c = boundary_curve(p, ts, hint, tol_x, bnd_c.schedule());
      std::optional<double> tilt;
      if (!b_tilt.empty()) tilt = parse_real(b_tilt, "--tilt");
      emit(bnd_c.out, [&](std::ostream& os) { write_boundary_csv(os, c, tilt); });
      if (!b_scan.empty()) {
        const BoundaryKinkScan scan = boundary_kink_scan(c, parse_real(b_scan_tol, "--slope-gap-tol"));
        emit(b_scan, [&](std::ostream& os) { write_kink_scan_csv(os, scan); });
        report_stream(bnd_c.out) << "boundary kink scan (" << BoundaryKinkScan::kLabel
                                 << "): " << scan.points.size() << " points, slope_gap_tol "
                                 << scan.slope_gap_tol << " (floor " << scan.floor << ")\n";
      }
    } else if (*kinks) {
      const ProblemSpec p = k_c.problem();
      const HorizonSchedule sch = k_c.schedule();
      const double t = parse_real(k_t, "--t");
      const double tol_x = parse_real(k_tolx, "--tol-x");
      if (!(tol_x > 0.0)) throw InputError("--tol-x must be positive");
      if (k_mmax < 1) throw InputError("--m-max must be at least 1");
      std::vector<double> ts;
      for (std::int64_t m = 0; m <= k_mmax; ++m) ts.push_back(t + static_cast<double>(m));
      const BoundaryCurve curve = boundary_curve(p, ts, std::nullopt, tol_x, sch);
      const double x_min = parse_real(k_xmin, "--x-min");
      const double x_max = k_xmax.empty() ? curve.bs.front() : parse_real(k_xmax, "--x-max");
      const double dx = parse_real(k_dx, "--dx");
      if (!(dx > 0.0) || !(x_max > x_min)) throw InputError("need --dx > 0 and --x-max > --x-min");
      const auto n = static_cast<std::size_t>(std::floor((x_max - x_min) / dx + 1e-9)) + 1;
      if (n < 3) throw InputError("slice needs at least three points");
      const ValueSlice s = value_slice(p, t, x_min, x_min + static_cast<double>(n - 1) * dx, n, sch);
      const double floor = noise_floor(s);
      // An exact slice has a zero floor; keep the default threshold positive.
      const double gap_tol = k_gap.empty() ? std::max(2.0 * floor, 1e-9) : parse_real(k_gap, "--gap-tol");
      const auto detected = detect_kinks(s, gap_tol);
      PredictOptions po;
      po.schedule = sch;
      if (!k_margin.empty()) po.margin = parse_real(k_margin, "--margin");
      const auto predicted = predict_kinks(p, curve, t, {x_min, s.x(n - 1)}, k_mmax, po);
      const CrossValidation cv = cross_validate(predicted, detected, parse_real(k_match, "--match-tol"),
                                                gap_tol);
      const auto merged = merge_kinks(cv);
      emit(k_c.out, [&](std::ostream& os) { write_kinks_csv(os, merged); });
      auto& rep = report_stream(k_c.out);
      rep << std::setprecision(6);
      rep << "slice dx " << s.dx << ", err_est " << s.err_est << ", noise floor " << floor
          << ", gap_tol " << gap_tol << "\n";
      rep << "detected " << detected.size() << ", predicted " << predicted.size() << "\n";
      for (const auto& r : cv.rows) {
        rep << "  predicted x=" << r.predicted.x << " m=" << *r.predicted.m
            << " hit_prob=" << *r.predicted.hit_prob << " : " << match_status_name(r.status);
        if (r.detected) rep << " (detected at " << r.detected->x << ", gap " << *r.detected->gap << ")";
        rep << "\n";
      }
      rep << "cross-validation " << (cv.pass() ? "PASS" : "FAIL") << "\n";
      if (!cv.pass()) return 3;
    } else if (*verify) {
      const ProblemSpec p = v_c.problem();
      VerifyConfig cfg;
      cfg.t = parse_real(v_t, "--t");
      cfg.tol_x = parse_real(v_tolx, "--tol-x");
      cfg.mc_paths = v_paths;
      cfg.mc_cap = v_cap;
      cfg.seed = v_c.seed;
      cfg.schedule = v_c.schedule();
      const auto rows = run_verify(p, cfg);
      bool ok = true;
      emit(v_c.out, [&](std::ostream& os) {
        os << std::left << std::setw(32) << "check" << std::setw(16) << "measured"
           << std::setw(10) << "relation" << std::setw(16) << "limit" << "result\n";
        for (const auto& r : rows) {
          ok = ok && r.pass;
          std::ostringstream m, l;
          m << std::setprecision(6) << r.measured;
          l << std::setprecision(6) << r.limit;
          os << std::left << std::setw(32) << r.name << std::setw(16) << m.str() << std::setw(10)
             << r.relation << std::setw(16) << (r.relation == "info" || r.relation == "skipped" ? "" : l.str())
             << (r.pass ? "PASS" : "FAIL") << "\n";
        }
      });
      return ok ? 0 : 3;
    } else if (*sim) {
      const ProblemSpec p = m_c.problem();
      const HorizonSchedule sch = m_c.schedule();
      const double t = parse_real(m_t, "--t");
      const double x = parse_real(m_x, "--x");
      const LatticePolicy pol = lattice_policy(p, t, x, m_cap, sch);
      const McResult r = simulate_value(p, pol.curve, t, x, m_paths, m_cap, m_c.seed,
                                        m_trunc == "value" ? pol.truncation() : TruncationValue{});
      emit(m_c.out, [&](std::ostream& os) { write_mc_csv(os, r); });
    }
  } catch (const stopbound::NoiseFloorError& e) {
    std::cerr << "error: " << e.what()
              << "\n  slope gaps smaller than the floor cannot be told apart from value error;"
                 " raise --gap-tol or tighten --tol\n";
    return e.exit_code();
  } catch (const stopbound::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
