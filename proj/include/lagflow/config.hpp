#pragma once

#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lagflow/core.hpp"
#include "lagflow/potentials.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// Minimal TOML-style parser: [section.subsection], key = value, where value is
// a number, "string", true/false, or a flat array of numbers.  Errors are
// collected with line numbers, never thrown mid-parse.
// ---------------------------------------------------------------------------

namespace config {

struct Value {
  enum class Type { number, boolean, string, array };
  Type type = Type::number;
  double num = 0.0;
  bool b = false;
  std::string str;
  std::vector<double> arr;
  int line = 0;
};

struct ParsedConfig {
  // section -> key -> value; root-level keys live under ""
  std::map<std::string, std::map<std::string, Value>> sections;
  std::vector<std::string> errors;
  std::string source_text;
};

namespace detail {

inline std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(const std::string &s, double &out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char *end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

inline bool valid_key(const std::string &k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

} // namespace detail

inline ParsedConfig parse_toml_subset(const std::string &text) {
  ParsedConfig out;
  out.source_text = text;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments, but not inside quotes
    bool quoted = false;
    std::string stripped;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      if (c == '#' && !quoted) break;
      stripped += c;
    }
    const std::string t = detail::trim(stripped);
    if (t.empty()) continue;

    if (t.front() == '[') {
      if (t.back() != ']') {
        out.errors.push_back("line " + std::to_string(lineno) + ": unterminated section header");
        continue;
      }
      const std::string name = detail::trim(t.substr(1, t.size() - 2));
      if (!detail::valid_key(name)) {
        out.errors.push_back("line " + std::to_string(lineno) + ": invalid section name '" +
                             name + "'");
        continue;
      }
      section = name;
      out.sections[section]; // make the section exist even if empty
      continue;
    }

    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      out.errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (!detail::valid_key(key) || key.find('.') != std::string::npos) {
      out.errors.push_back("line " + std::to_string(lineno) + ": invalid key '" + key + "'");
      continue;
    }
    if (val.empty()) {
      out.errors.push_back("line " + std::to_string(lineno) + ": missing value for '" + key +
                           "'");
      continue;
    }
    if (out.sections[section].count(key)) {
      out.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }

    Value v;
    v.line = lineno;
    if (val.front() == '"') {
      if (val.size() < 2 || val.back() != '"') {
        out.errors.push_back("line " + std::to_string(lineno) + ": unterminated string");
        continue;
      }
      v.type = Value::Type::string;
      v.str = val.substr(1, val.size() - 2);
    } else if (val == "true" || val == "false") {
      v.type = Value::Type::boolean;
      v.b = val == "true";
    } else if (val.front() == '[') {
      if (val.back() != ']') {
        out.errors.push_back("line " + std::to_string(lineno) + ": unterminated array");
        continue;
      }
      v.type = Value::Type::array;
      std::string body = val.substr(1, val.size() - 2);
      std::size_t pos = 0;
      bool ok = true;
      while (pos < body.size()) {
        std::size_t comma = body.find(',', pos);
        const std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                             : comma - pos);
        if (!detail::trim(item).empty()) {
          double num;
          if (!detail::parse_number(item, num)) {
            out.errors.push_back("line " + std::to_string(lineno) +
                                 ": non-numeric array element '" + detail::trim(item) + "'");
            ok = false;
            break;
          }
          v.arr.push_back(num);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (!ok) continue;
    } else {
      double num;
      if (!detail::parse_number(val, num)) {
        out.errors.push_back("line " + std::to_string(lineno) + ": cannot parse value '" + val +
                             "' for '" + key + "'");
        continue;
      }
      v.type = Value::Type::number;
      v.num = num;
    }
    out.sections[section][key] = v;
  }
  return out;
}

// Typed, presence-tracking access layer.  Whatever remains unread when
// finish() runs is reported as an unknown key.
class Reader {
public:
  Reader(const ParsedConfig &cfg, std::vector<std::string> &errors)
      : cfg_(cfg), errors_(errors) {}

  bool has(const std::string &sec, const std::string &key) const {
    auto s = cfg_.sections.find(sec);
    return s != cfg_.sections.end() && s->second.count(key) > 0;
  }

  int line(const std::string &sec, const std::string &key) const {
    return cfg_.sections.at(sec).at(key).line;
  }

  double number(const std::string &sec, const std::string &key, double dflt) {
    const Value *v = fetch(sec, key);
    if (!v) return dflt;
    if (v->type != Value::Type::number) {
      type_error(sec, key, *v, "a number");
      return dflt;
    }
    return v->num;
  }

  double require_number(const std::string &sec, const std::string &key) {
    const Value *v = fetch(sec, key);
    if (!v) {
      missing(sec, key);
      return 0.0;
    }
    if (v->type != Value::Type::number) {
      type_error(sec, key, *v, "a number");
      return 0.0;
    }
    return v->num;
  }

  int integer(const std::string &sec, const std::string &key, int dflt) {
    const Value *v = fetch(sec, key);
    if (!v) return dflt;
    if (v->type != Value::Type::number || v->num != static_cast<int>(v->num)) {
      type_error(sec, key, *v, "an integer");
      return dflt;
    }
    return static_cast<int>(v->num);
  }

  int require_integer(const std::string &sec, const std::string &key) {
    const Value *v = fetch(sec, key);
    if (!v) {
      missing(sec, key);
      return 0;
    }
    if (v->type != Value::Type::number || v->num != static_cast<int>(v->num)) {
      type_error(sec, key, *v, "an integer");
      return 0;
    }
    return static_cast<int>(v->num);
  }

  bool boolean(const std::string &sec, const std::string &key, bool dflt) {
    const Value *v = fetch(sec, key);
    if (!v) return dflt;
    if (v->type != Value::Type::boolean) {
      type_error(sec, key, *v, "true or false");
      return dflt;
    }
    return v->b;
  }

  std::string string(const std::string &sec, const std::string &key, const std::string &dflt) {
    const Value *v = fetch(sec, key);
    if (!v) return dflt;
    if (v->type != Value::Type::string) {
      type_error(sec, key, *v, "a quoted string");
      return dflt;
    }
    return v->str;
  }

  std::string require_string(const std::string &sec, const std::string &key) {
    const Value *v = fetch(sec, key);
    if (!v) {
      missing(sec, key);
      return "";
    }
    if (v->type != Value::Type::string) {
      type_error(sec, key, *v, "a quoted string");
      return "";
    }
    return v->str;
  }

  std::vector<double> array(const std::string &sec, const std::string &key) {
    const Value *v = fetch(sec, key);
    if (!v) return {};
    if (v->type != Value::Type::array) {
      type_error(sec, key, *v, "an array of numbers");
      return {};
    }
    return v->arr;
  }

  void error_at(const std::string &sec, const std::string &key, const std::string &msg) {
    if (has(sec, key))
      errors_.push_back("line " + std::to_string(line(sec, key)) + ": " + qualify(sec, key) +
                        ": " + msg);
    else
      errors_.push_back(qualify(sec, key) + ": " + msg);
  }

  void error(const std::string &msg) { errors_.push_back(msg); }

  // report unknown keys/sections
  void finish() {
    for (const auto &[sec, keys] : cfg_.sections) {
      if (!known_sections_.count(sec)) {
        std::string where = sec.empty() ? "top level" : "[" + sec + "]";
        for (const auto &[key, v] : keys)
          errors_.push_back("line " + std::to_string(v.line) + ": unknown section for key '" +
                            key + "' (" + where + ")");
        if (keys.empty())
          errors_.push_back("unknown section [" + sec + "]");
        continue;
      }
      for (const auto &[key, v] : keys)
        if (!used_.count({sec, key}))
          errors_.push_back("line " + std::to_string(v.line) + ": unknown key '" +
                            qualify(sec, key) + "'");
    }
  }

  void mark_section_known(const std::string &sec) { known_sections_.insert(sec); }

private:
  const Value *fetch(const std::string &sec, const std::string &key) {
    known_sections_.insert(sec);
    auto s = cfg_.sections.find(sec);
    if (s == cfg_.sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    used_.insert({sec, key});
    return &k->second;
  }

  static std::string qualify(const std::string &sec, const std::string &key) {
    return sec.empty() ? key : sec + "." + key;
  }

  void missing(const std::string &sec, const std::string &key) {
    errors_.push_back("missing required key '" + qualify(sec, key) + "'");
  }

  void type_error(const std::string &sec, const std::string &key, const Value &v,
                  const std::string &want) {
    errors_.push_back("line " + std::to_string(v.line) + ": '" + qualify(sec, key) +
                      "' must be " + want);
  }

  const ParsedConfig &cfg_;
  std::vector<std::string> &errors_;
  std::set<std::pair<std::string, std::string>> used_;
  std::set<std::string> known_sections_;
};

} // namespace config

// ---------------------------------------------------------------------------
// Run configuration schema
// ---------------------------------------------------------------------------

enum class DomainShape { interval, disk, rectangle };
enum class StopRule { horizon, steady };
enum class InitMethod { transport, identity_reference };

struct RunConfig {
  int dimension = 1;

  DomainShape shape = DomainShape::interval;
  double dom_lo = -1.0, dom_hi = 1.0; // interval
  double radius = 1.0;                // disk
  double rect_x0 = 0.0, rect_y0 = 0.0, rect_x1 = 1.0, rect_y1 = 1.0;

  int n_cells = 100; // 1d
  int n_rings = 14;  // disk
  int nx = 10, ny = 10;

  // initial density
  std::string initial_kind = "gaussian";
  double mass = 1.0;
  double sigma = 0.2;
  double center = 0.0; // 1d
  double center_x = 0.0, center_y = 0.0;
  double bb_m = 2.0, bb_t0 = 1e-3; // barenblatt
  std::vector<double> sum_masses, sum_centers, sum_sigmas;      // 1d gaussian_sum
  std::vector<double> sum_centers_x, sum_centers_y;             // 2d gaussian_sum
  double uniform_lo = 0.0, uniform_hi = 0.0; // 0,0 -> whole domain
  InitMethod init_method = InitMethod::transport;

  EnergySpec energy; // reference_density filled in at run time

  // solver
  double dt = 1e-3;
  double eps_residual = 1e-6;
  double eps_step = 1e-6;
  int max_newton = 50;
  double damping_min = 1.0 / 64.0;
  bool free_boundary = false;
  double t_start = 0.0;

  StopRule stop_rule = StopRule::horizon;
  double t_final = 0.0;
  int n_steps = -1;
  double steady_tol = 1e-6;
  int steady_extra_steps = 500;
  int max_steps = 100000;
  bool refine_on_failure = true;

  std::string output_dir = "out";
  int snapshot_every = -1; // -1: dimension default (10 in 1d, 1 in 2d)

  double recon_epsilon = 1e-2;
  bool recon_coercive = true;

  std::string source_text; // config echo for the manifest
};

inline RunConfig build_run_config(const config::ParsedConfig &parsed,
                                  std::vector<std::string> &errors) {
  errors.insert(errors.end(), parsed.errors.begin(), parsed.errors.end());
  config::Reader r(parsed, errors);
  RunConfig c;
  c.source_text = parsed.source_text;

  c.dimension = r.require_integer("", "dimension");
  if (c.dimension != 1 && c.dimension != 2)
    r.error_at("", "dimension", "dimension must be 1 or 2");

  // domain + mesh
  if (c.dimension == 2) {
    const std::string shape = r.string("domain", "shape", "disk");
    if (shape == "disk") {
      c.shape = DomainShape::disk;
      c.radius = r.number("domain", "radius", 1.0);
      if (!(c.radius > 0.0)) r.error_at("domain", "radius", "radius must be positive");
      c.n_rings = r.integer("mesh", "n_rings", 14);
      if (c.n_rings < 1) r.error_at("mesh", "n_rings", "need at least 1 ring");
    } else if (shape == "rectangle") {
      c.shape = DomainShape::rectangle;
      c.rect_x0 = r.number("domain", "x0", 0.0);
      c.rect_y0 = r.number("domain", "y0", 0.0);
      c.rect_x1 = r.number("domain", "x1", 1.0);
      c.rect_y1 = r.number("domain", "y1", 1.0);
      if (!(c.rect_x1 > c.rect_x0 && c.rect_y1 > c.rect_y0))
        r.error("domain rectangle must have x1 > x0 and y1 > y0");
      c.nx = r.integer("mesh", "nx", 10);
      c.ny = r.integer("mesh", "ny", 10);
      if (c.nx < 1 || c.ny < 1) r.error("mesh nx and ny must be at least 1");
    } else {
      r.error_at("domain", "shape", "shape must be \"disk\" or \"rectangle\"");
    }
  } else {
    c.shape = DomainShape::interval;
    c.dom_lo = r.number("domain", "lo", -1.0);
    c.dom_hi = r.number("domain", "hi", 1.0);
    if (!(c.dom_hi > c.dom_lo)) r.error("domain must have hi > lo");
    c.n_cells = r.integer("mesh", "n_cells", 100);
    if (c.n_cells < 2) r.error_at("mesh", "n_cells", "need at least 2 cells");
  }

  // initial density
  c.initial_kind = r.string("initial", "kind", "");
  if (c.initial_kind.empty()) r.error("missing required key 'initial.kind'");
  c.mass = r.require_number("initial", "mass");
  if (!(c.mass > 0.0)) r.error_at("initial", "mass", "mass must be positive");

  if (c.initial_kind == "gaussian") {
    c.sigma = r.require_number("initial", "sigma");
    if (!(c.sigma > 0.0)) r.error_at("initial", "sigma", "sigma must be positive");
    if (c.dimension == 1) {
      c.center = r.number("initial", "center", 0.0);
    } else {
      c.center_x = r.number("initial", "center_x", 0.0);
      c.center_y = r.number("initial", "center_y", 0.0);
    }
  } else if (c.initial_kind == "gaussian_sum") {
    if (c.dimension == 1) {
      c.sum_masses = r.array("initial", "masses");
      c.sum_centers = r.array("initial", "centers");
      c.sum_sigmas = r.array("initial", "sigmas");
      if (c.sum_masses.empty() || c.sum_masses.size() != c.sum_centers.size() ||
          c.sum_masses.size() != c.sum_sigmas.size())
        r.error("initial.masses, initial.centers, initial.sigmas must be non-empty arrays of "
                "equal length");
    } else {
      c.sum_masses = r.array("initial", "weights");
      c.sum_centers_x = r.array("initial", "centers_x");
      c.sum_centers_y = r.array("initial", "centers_y");
      c.sum_sigmas = r.array("initial", "sigmas");
      if (c.sum_masses.empty() || c.sum_masses.size() != c.sum_centers_x.size() ||
          c.sum_masses.size() != c.sum_centers_y.size() ||
          c.sum_masses.size() != c.sum_sigmas.size())
        r.error("initial.weights, initial.centers_x, initial.centers_y, initial.sigmas must be "
                "non-empty arrays of equal length");
    }
  } else if (c.initial_kind == "barenblatt") {
    if (c.dimension != 1) r.error("barenblatt initial data is 1d only");
    c.bb_m = r.require_number("initial", "m");
    c.bb_t0 = r.require_number("initial", "t0");
    if (!(c.bb_m > 1.0)) r.error_at("initial", "m", "barenblatt needs m > 1");
    if (!(c.bb_t0 > 0.0)) r.error_at("initial", "t0", "barenblatt needs t0 > 0");
  } else if (c.initial_kind == "uniform") {
    if (c.dimension != 1) r.error("uniform initial data is 1d only");
    c.uniform_lo = r.number("initial", "lo", 0.0);
    c.uniform_hi = r.number("initial", "hi", 0.0);
  } else if (!c.initial_kind.empty()) {
    r.error_at("initial", "kind",
               "unknown initial kind '" + c.initial_kind +
                   "' (expected gaussian, gaussian_sum, barenblatt, or uniform)");
  }

  const std::string method = r.string("initial", "method", "transport");
  if (method == "transport") {
    c.init_method = InitMethod::transport;
  } else if (method == "identity_reference") {
    c.init_method = InitMethod::identity_reference;
    if (c.dimension == 1)
      r.error_at("initial", "method", "identity_reference initialization is 2d only");
  } else {
    r.error_at("initial", "method", "method must be \"transport\" or \"identity_reference\"");
  }

  // energy
  {
    const std::string kind = r.string("energy.internal", "kind", "none");
    if (kind == "none") {
      c.energy.internal.kind = InternalKind::none;
    } else if (kind == "log_entropy") {
      c.energy.internal.kind = InternalKind::log_entropy;
    } else if (kind == "power") {
      c.energy.internal.kind = InternalKind::power;
      c.energy.internal.m = r.require_number("energy.internal", "m");
      c.energy.internal.nu = r.number("energy.internal", "nu", 1.0);
      if (!r.has("energy.internal", "normalization")) {
        r.error("missing required key 'energy.internal.normalization' (over_m_minus_1 or over_m) "
                "when kind = \"power\"");
      } else {
        const std::string norm = r.string("energy.internal", "normalization", "");
        if (norm == "over_m_minus_1")
          c.energy.internal.normalization = PowerNormalization::over_m_minus_1;
        else if (norm == "over_m")
          c.energy.internal.normalization = PowerNormalization::over_m;
        else
          r.error_at("energy.internal", "normalization",
                     "normalization must be \"over_m_minus_1\" or \"over_m\"");
      }
    } else {
      r.error_at("energy.internal", "kind", "unknown internal energy kind '" + kind + "'");
    }
  }
  {
    const std::string kind = r.string("energy.external", "kind", "none");
    if (kind == "none") {
      c.energy.external.kind = ExternalKind::none;
    } else if (kind == "harmonic") {
      c.energy.external.kind = ExternalKind::harmonic;
    } else if (kind == "double_well") {
      c.energy.external.kind = ExternalKind::double_well;
    } else if (kind == "log_radial") {
      c.energy.external.kind = ExternalKind::log_radial;
      c.energy.external.alpha = r.number("energy.external", "alpha", 1.0);
      c.energy.external.beta = r.number("energy.external", "beta", 1.0);
      if (!(c.energy.external.alpha > 0.0 && c.energy.external.beta > 0.0))
        r.error("log_radial potential requires alpha > 0 and beta > 0");
    } else {
      r.error_at("energy.external", "kind", "unknown external potential kind '" + kind + "'");
    }
  }
  {
    const std::string kind = r.string("energy.interaction", "kind", "none");
    if (kind == "none") {
      c.energy.interaction.kind = InteractionKind::none;
    } else if (kind == "power_law") {
      c.energy.interaction.kind = InteractionKind::power_law;
      c.energy.interaction.a = r.require_number("energy.interaction", "a");
      c.energy.interaction.b = r.number("energy.interaction", "b", 0.0);
      c.energy.interaction.log_coefficient =
          r.number("energy.interaction", "log_coefficient", 1.0);
      if (!(c.energy.interaction.a > c.energy.interaction.b &&
            c.energy.interaction.b >= 0.0))
        r.error_at("energy.interaction", "a",
                   "power_law exponents must satisfy a > b >= 0 (|x|^0/0 means the log term)");
    } else if (kind == "morse") {
      c.energy.interaction.kind = InteractionKind::morse;
      c.energy.interaction.C_A = r.number("energy.interaction", "C_A", 1.0);
      c.energy.interaction.l_A = r.number("energy.interaction", "l_A", 1.0);
      c.energy.interaction.C_R = r.number("energy.interaction", "C_R", 1.0);
      c.energy.interaction.l_R = r.number("energy.interaction", "l_R", 1.0);
      if (!(c.energy.interaction.C_A > 0.0 && c.energy.interaction.l_A > 0.0 &&
            c.energy.interaction.C_R > 0.0 && c.energy.interaction.l_R > 0.0))
        r.error("morse parameters C_A, l_A, C_R, l_R must all be positive");
    } else if (kind == "log_ks") {
      c.energy.interaction.kind = InteractionKind::log_ks;
      c.energy.interaction.chi = r.number("energy.interaction", "chi", 1.0);
      c.energy.interaction.dim = r.integer("energy.interaction", "d", c.dimension);
      if (!(c.energy.interaction.chi > 0.0))
        r.error_at("energy.interaction", "chi", "chi must be positive");
      if (c.energy.interaction.dim < 1)
        r.error_at("energy.interaction", "d", "d must be a positive integer");
    } else {
      r.error_at("energy.interaction", "kind", "unknown interaction kind '" + kind + "'");
    }
  }

  // solver
  c.dt = r.require_number("solver", "dt");
  if (!(c.dt > 0.0)) r.error_at("solver", "dt", "dt must be positive");
  c.eps_residual = r.number("solver", "eps_residual", 1e-6);
  c.eps_step = r.number("solver", "eps_step", 1e-6);
  c.max_newton = r.integer("solver", "max_newton", 50);
  c.damping_min = r.number("solver", "damping_min", 1.0 / 64.0);
  c.free_boundary = r.boolean("solver", "free_boundary", false);
  c.t_start = r.number("solver", "t_start", 0.0);
  if (c.free_boundary && c.dimension != 1)
    r.error_at("solver", "free_boundary", "free_boundary is 1d only");
  if (c.free_boundary && c.energy.internal.kind != InternalKind::power)
    r.error("free_boundary requires a power-law internal energy");
  if (!(c.eps_residual > 0.0 && c.eps_step > 0.0))
    r.error("solver tolerances must be positive");
  if (c.max_newton < 1) r.error_at("solver", "max_newton", "max_newton must be >= 1");
  if (!(c.damping_min > 0.0 && c.damping_min <= 1.0))
    r.error_at("solver", "damping_min", "damping_min must lie in (0, 1]");

  // stop rule
  const std::string rule = r.string("stop", "rule", "horizon");
  if (rule == "horizon") {
    c.stop_rule = StopRule::horizon;
    const bool has_t = r.has("stop", "t_final");
    const bool has_n = r.has("stop", "n_steps");
    c.t_final = r.number("stop", "t_final", 0.0);
    c.n_steps = r.integer("stop", "n_steps", -1);
    if (has_t == has_n)
      r.error("horizon stop rule needs exactly one of stop.t_final, stop.n_steps");
    else if (has_t && !(c.t_final > c.t_start))
      r.error_at("stop", "t_final", "t_final must exceed solver.t_start");
    else if (has_n && c.n_steps < 1)
      r.error_at("stop", "n_steps", "n_steps must be >= 1");
  } else if (rule == "steady") {
    c.stop_rule = StopRule::steady;
  } else {
    r.error_at("stop", "rule", "rule must be \"horizon\" or \"steady\"");
  }
  c.steady_tol = r.number("stop", "steady_tol", 1e-6);
  c.steady_extra_steps = r.integer("stop", "steady_extra_steps", 500);
  c.max_steps = r.integer("stop", "max_steps", 100000);
  c.refine_on_failure = r.boolean("stop", "refine_on_failure", true);
  if (!(c.steady_tol > 0.0)) r.error_at("stop", "steady_tol", "steady_tol must be positive");
  if (c.max_steps < 1) r.error_at("stop", "max_steps", "max_steps must be >= 1");

  // output + recon
  c.output_dir = r.string("output", "directory", "out");
  c.snapshot_every = r.integer("output", "snapshot_every", c.dimension == 1 ? 10 : 1);
  if (c.snapshot_every < 1) r.error_at("output", "snapshot_every", "must be >= 1");
  c.recon_epsilon = r.number("recon", "epsilon", 1e-2);
  c.recon_coercive = r.boolean("recon", "coercive_sign", true);
  if (!(c.recon_epsilon > 0.0)) r.error_at("recon", "epsilon", "epsilon must be positive");

  // catalog-level consistency
  std::vector<std::string> spec_problems;
  validate_spec(c.energy, spec_problems);
  for (const auto &p : spec_problems) r.error(p);

  r.finish();
  return c;
}

inline RunConfig load_run_config(const std::string &text) {
  const config::ParsedConfig parsed = config::parse_toml_subset(text);
  std::vector<std::string> errors;
  RunConfig c = build_run_config(parsed, errors);
  if (!errors.empty()) {
    std::string msg = "configuration invalid:";
    for (const auto &e : errors) msg += "\n  " + e;
    throw InvalidSpecError(msg);
  }
  return c;
}

} // namespace lagflow
