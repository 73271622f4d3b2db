#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopbound/boundary.hpp"
#include "stopbound/errors.hpp"
#include "stopbound/kinks.hpp"
#include "stopbound/mc.hpp"
#include "stopbound/model.hpp"
#include "stopbound/rational.hpp"
#include "stopbound/solver.hpp"

namespace stopbound {

// ---- problem files -------------------------------------------------------
//
//   {
//     "name": "my_problem",                      optional
//     "jumps": [{"value": "-1", "prob": "1/2"},
//               {"value": "1",  "prob": "1/2"}],
//     "gain": {"family": "chow_robbins"},
//     "t_min": "1",
//     "majorant": "auto"                         optional: "auto" | "none"
//   }
//
// Rationals are strings "p", "p/q" or an exact decimal "0.25". The gain
// family is one of chow_robbins, dist_to_integer, sqrt_threshold, or
// affine_tilt with params {"base": <gain>, "c": "p/q"}.

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const nlohmann::json& field(const nlohmann::json& obj, const std::string& key,
                                   const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "/" + key + ": missing field");
  return *it;
}

inline Rational rational_field(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path + ": expected a rational string such as \"1/2\"");
  try {
    return Rational::parse(v.get<std::string>());
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline GainFunction gain_field(const nlohmann::json& v, const std::string& path) {
  const auto& fam = field(v, "family", path);
  if (!fam.is_string()) throw ParseError(path + "/family: expected a string");
  const std::string f = fam.get<std::string>();
  if (f == "chow_robbins") return GainFunction::chow_robbins();
  if (f == "dist_to_integer") return GainFunction::dist_to_integer();
  if (f == "sqrt_threshold") return GainFunction::sqrt_threshold();
  if (f == "affine_tilt") {
    const auto& params = field(v, "params", path);
    GainFunction base = gain_field(field(params, "base", path + "/params"), path + "/params/base");
    const Rational c = rational_field(field(params, "c", path + "/params"), path + "/params/c");
    return GainFunction::affine_tilt(std::move(base), c);
  }
  throw ParseError(path + "/family: unknown gain family \"" + f + "\"");
}

}  // namespace detail

inline ProblemSpec parse_problem(const std::string& text, const std::string& source = "<input>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(source + ": " + detail::line_col(text, at) + ": malformed JSON (" +
                     e.what() + ")");
  }
  try {
    if (!doc.is_object()) throw ParseError("/: expected an object");
    std::string name = "custom";
    if (const auto it = doc.find("name"); it != doc.end()) {
      if (!it->is_string()) throw ParseError("/name: expected a string");
      name = it->get<std::string>();
    }
    const auto& jumps = detail::field(doc, "jumps", "");
    if (!jumps.is_array() || jumps.empty()) throw ParseError("/jumps: expected a non-empty array");
    std::vector<JumpAtom> atoms;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
      const std::string p = "/jumps/" + std::to_string(i);
      atoms.push_back({detail::rational_field(detail::field(jumps[i], "value", p), p + "/value"),
                       detail::rational_field(detail::field(jumps[i], "prob", p), p + "/prob")});
    }
    JumpDistribution dist = JumpDistribution::make(std::move(atoms));
    GainFunction gain = detail::gain_field(detail::field(doc, "gain", ""), "/gain");
    const Rational t_min = detail::rational_field(detail::field(doc, "t_min", ""), "/t_min");
    Majorant maj = ProblemSpec::automatic_majorant(dist, gain);
    if (const auto it = doc.find("majorant"); it != doc.end()) {
      if (!it->is_string() || (*it != "auto" && *it != "none")) {
        throw ParseError("/majorant: expected \"auto\" or \"none\"");
      }
      if (*it == "none") maj = {};
    }
    return ProblemSpec(name, std::move(dist), std::move(gain), t_min, maj);
  } catch (const Error& e) {
    // Keep the error class (and so the exit status) but name the file.
    if (dynamic_cast<const ParseError*>(&e)) throw ParseError(source + ": " + e.what());
    throw;
  }
}

inline ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str(), path);
}

inline std::string problem_to_json(const ProblemSpec& p) {
  std::function<nlohmann::json(const GainFunction&)> gain = [&](const GainFunction& g) {
    nlohmann::json j{{"family", g.name()}};
    if (g.family() == GainFamily::affine_tilt) {
      j["params"] = {{"base", gain(*g.base())}, {"c", g.tilt().to_string()}};
    }
    return j;
  };
  nlohmann::json doc;
  doc["name"] = p.name();
  doc["jumps"] = nlohmann::json::array();
  for (const auto& a : p.jumps().atoms()) {
    doc["jumps"].push_back({{"value", a.value.to_string()}, {"prob", a.prob.to_string()}});
  }
  doc["gain"] = gain(p.gain());
  doc["t_min"] = p.t_min().to_string();
  doc["majorant"] = p.has_majorant() ? "auto" : "none";
  return doc.dump(2) + "\n";
}

// ---- CSV -----------------------------------------------------------------

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_slice_csv(std::ostream& os, const ValueSlice& s) {
  os << "x,V,g,err_est\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << fmt12(s.x(i)) << ',' << fmt12(s.values[i]) << ',' << fmt12(s.gains[i]) << ','
       << fmt12(s.err_est) << '\n';
  }
}

inline void write_boundary_csv(std::ostream& os, const BoundaryCurve& c,
                               std::optional<double> tilt_c = std::nullopt) {
  os << (tilt_c ? "t,b,tilted\n" : "t,b\n");
  for (std::size_t k = 0; k < c.size(); ++k) {
    os << fmt12(c.ts[k]) << ',' << fmt12(c.bs[k]);
    if (tilt_c) os << ',' << fmt12(c.bs[k] - *tilt_c * c.ts[k]);
    os << '\n';
  }
}

inline void write_kink_scan_csv(std::ostream& os, const BoundaryKinkScan& scan) {
  os << "t,left_slope,right_slope,gap\n";
  for (const auto& k : scan.points) {
    os << fmt12(k.t) << ',' << fmt12(k.left_slope) << ',' << fmt12(k.right_slope) << ','
       << fmt12(k.gap()) << '\n';
  }
}

inline void write_kinks_csv(std::ostream& os, const std::vector<KinkPoint>& kinks) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt12(*v) : std::string(); };
  os << "x,left_slope,right_slope,gap,source,m,hit_prob\n";
  for (const auto& k : kinks) {
    os << fmt12(k.x) << ',' << opt(k.left_slope) << ',' << opt(k.right_slope) << ','
       << opt(k.gap) << ',' << kink_source_name(k.source) << ','
       << (k.m ? std::to_string(*k.m) : std::string()) << ',' << opt(k.hit_prob) << '\n';
  }
}

inline void write_mc_csv(std::ostream& os, const McResult& r) {
  os << "t,x,mean,std_error,n_paths,n_truncated,seed\n";
  os << fmt12(r.t) << ',' << fmt12(r.x) << ',' << fmt12(r.mean) << ',' << fmt12(r.std_error) << ','
     << r.n_paths << ',' << r.n_truncated << ',' << r.seed << '\n';
}

}  // namespace stopbound
