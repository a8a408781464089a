#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rvcyl/error.hpp"
#include "rvcyl/grid.hpp"
#include "rvcyl/io.hpp"
#include "rvcyl/regularization.hpp"
#include "rvcyl/spde.hpp"

namespace rvcyl::harness {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"rv-identities", "proposition1",     "isometry", "kernel-bounds",
                                              "spde-adapted",  "spde-anticipating", "lipschitz"};
  return names;
}

inline const std::vector<std::string>& integrand_names() {
  static const std::vector<std::string> names{"constant", "indicator", "noise-linear"};
  return names;
}

/// Tolerance keys each experiment understands, with their defaults.
inline std::map<std::string, double> default_tolerances(std::string_view experiment) {
  if (experiment == "rv-identities")
    return {{"identity", 1e-2}, {"ito", 2e-2}, {"quadratic-variation", 5e-2}, {"ucp-fraction", 0.95}};
  if (experiment == "proposition1") return {{"rms", 5e-2}};
  if (experiment == "isometry") return {{"relative", 5e-2}};
  if (experiment == "kernel-bounds") return {{"slope", 5e-2}, {"mass", 1.0}, {"semigroup", 1e-8}};
  if (experiment == "spde-adapted") return {{"deterministic", 1e-6}, {"variance", 0.1}, {"residual", 5e-2}};
  if (experiment == "spde-anticipating") return {{"ratio", 2.0}, {"ito-residual", 1e-10}};
  if (experiment == "lipschitz") return {{"slope", -0.1}, {"deterministic", 5e-2}};
  return {};
}

using KeyValues = std::map<std::string, std::string, std::less<>>;

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parses the flat key-value format:
///   # comment
///   experiment = proposition1
///   [grid]
///   N = 4096          -> key "grid.N"
///   ladder.eps0 = 0.1 -> dotted keys work outside sections too
/// Later assignments override earlier ones.
inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      rvcyl::detail::require(body.back() == ']' && body.size() > 2, Errc::config,
                             "line " + std::to_string(line_no) + ": malformed section header");
      section = detail::trim(std::string_view(body).substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    rvcyl::detail::require(eq != std::string::npos, Errc::config,
                           "line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = detail::trim(std::string_view(body).substr(0, eq));
    const auto value = detail::trim(std::string_view(body).substr(eq + 1));
    rvcyl::detail::require(!key.empty(), Errc::config, "line " + std::to_string(line_no) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = value;
  }
  return kv;
}

/// Defaults shared by every experiment, then per-experiment adjustments.
inline KeyValues default_values(std::string_view experiment) {
  KeyValues d{
      {"grid.T", "1"},
      {"grid.N", "4096"},
      {"grid.P", "64"},
      {"truncation.J", "16"},
      {"truncation.M", "32"},
      {"ladder.eps0", "0.1"},
      {"ladder.ratio", "0.5"},
      {"ladder.length", "floor"},
      {"mc.paths", "1000"},
      {"mc.seed", "2026"},
      {"mc.workers", "1"},
      {"model.f", "sin-profile"},
      {"model.g", "linear"},
      {"model.F", "constant"},
      {"integrand.names", "constant, indicator, noise-linear"},
      {"integrand.mode", "1"},
      {"integrand.cutoff", "0.5"},
      {"kernel.t_min", "0.001"},
      {"kernel.t_max", "0.01"},
      {"kernel.count", "10"},
      {"kernel.semigroup_modes", "64"},
      {"kernel.semigroup_t", "0.05"},
      {"spde.z", "1"},
      {"spde.residual_paths", "200"},
      {"spde.probes", "0.25:0.5, 0.5:0.25, 1:0.5, 1:0.75"},
      {"lipschitz.z", "-2, -0.6, -0.2, -0.02, 0, 0.02, 0.2, 0.6, 2"},
      {"output.dir", ""},
  };
  if (experiment == "rv-identities") d["ladder.length"] = "4";
  if (experiment == "isometry") {
    d["grid.N"] = "256";
    d["mc.paths"] = "10000";
    d["integrand.names"] = "constant";
  }
  if (experiment == "kernel-bounds") d["truncation.M"] = "256";
  if (experiment == "spde-adapted" || experiment == "spde-anticipating") {
    d["truncation.J"] = "32";
    d["truncation.M"] = "32";
  }
  if (experiment == "spde-anticipating") {
    d["model.F"] = "terminal-mode";
    d["mc.paths"] = "200";
  }
  if (experiment == "lipschitz") {
    d["grid.N"] = "1024";
    d["truncation.J"] = "32";
    d["truncation.M"] = "32";
    d["mc.paths"] = "50";
    d["model.g.sigma"] = "0.5";
  }
  return d;
}

struct LadderSpec {
  double eps0 = 0.1;
  double ratio = 0.5;
  std::optional<std::size_t> length;  // empty: run down to the floor

  [[nodiscard]] EpsilonLadder build(const TimeGrid& grid) const {
    const double t = grid.horizon();
    if (length) return EpsilonLadder::geometric(eps0 * t, ratio, *length);
    return EpsilonLadder::down_to_floor(eps0 * t, ratio, grid);
  }
};

struct ExperimentConfig {
  std::string experiment;
  double horizon = 1.0;
  std::size_t steps = 4096;
  std::size_t points = 64;
  std::size_t noise_modes = 16;
  std::size_t kernel_modes = 32;
  LadderSpec ladder;
  std::size_t paths = 1000;
  std::uint64_t seed = 2026;
  std::size_t workers = 1;
  std::string f, g, F;
  RegistryParams f_params, g_params, F_params;
  std::vector<std::string> integrands;
  std::size_t integrand_mode = 1;
  double integrand_cutoff = 0.5;
  double kernel_t_min = 1e-3, kernel_t_max = 1e-2;
  std::size_t kernel_count = 10;
  std::size_t semigroup_modes = 64;
  double semigroup_t = 0.05;
  double spde_z = 1.0;
  std::size_t residual_paths = 200;
  std::vector<std::pair<double, double>> probes;
  std::vector<double> lipschitz_z;
  std::map<std::string, double> tolerances;
  std::string output_dir;
  KeyValues resolved;  // every key after defaulting and overrides

  [[nodiscard]] TimeGrid time_grid() const { return TimeGrid(horizon, steps); }
  [[nodiscard]] SpaceGrid space_grid() const { return SpaceGrid(points); }
  [[nodiscard]] double tolerance(const std::string& key) const { return tolerances.at(key); }

  [[nodiscard]] SpdeProblem problem() const {
    SpdeProblem p{time_grid(), space_grid()};
    p.noise_modes = noise_modes;
    p.kernel_modes = kernel_modes;
    p.g = registry::noise_coefficient(g, g_params);
    p.f = registry::initial_profile(f, f_params);
    p.F = registry::initial_randomness(F, F_params);
    return p;
  }

  /// Canonical text of the result-relevant keys (workers and output location
  /// excluded: they cannot change any number).
  [[nodiscard]] std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : resolved) {
      if (k == "mc.workers" || k == "output.dir") continue;
      out += k + "=" + v + "\n";
    }
    return out;
  }

  /// 64-bit FNV-1a of canonical().
  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  [[nodiscard]] std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }
};

namespace detail {

class Validator {
 public:
  explicit Validator(const KeyValues& kv) : kv_(kv) {}

  const std::string& raw(const std::string& key) const { return kv_.at(key); }

  double number(const std::string& key) {
    const auto& s = raw(key);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
      fail(key, "expected a finite number, got '" + s + "'");
      return 0.0;
    }
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const auto& s = raw(key);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || s.front() == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
      fail(key, "expected a non-negative integer, got '" + s + "'");
      return 0;
    }
    return v;
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(raw(key))) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (end != item.c_str() + item.size() || !std::isfinite(v)) {
        fail(key, "'" + item + "' is not a number");
        continue;
      }
      out.push_back(v);
    }
    return out;
  }

  void fail(const std::string& field, const std::string& message) { errors_.push_back(field + ": " + message); }
  void check(bool ok, const std::string& field, const std::string& message) {
    if (!ok) fail(field, message);
  }

  [[nodiscard]] const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  const KeyValues& kv_;
  std::vector<std::string> errors_;
};

inline bool is_known_key(const KeyValues& defaults, const std::map<std::string, double>& tolerances,
                         const std::string& key) {
  if (key == "experiment" || defaults.count(key)) return true;
  for (const char* prefix : {"model.f.", "model.g.", "model.F."})
    if (key.rfind(prefix, 0) == 0 && key.size() > std::string_view(prefix).size()) return true;
  if (key.rfind("tolerance.", 0) == 0) return tolerances.count(key.substr(10)) > 0;
  return false;
}

inline RegistryParams registry_params(const KeyValues& kv, const std::string& prefix, Validator& v) {
  RegistryParams p;
  for (const auto& [k, _] : kv)
    if (k.rfind(prefix, 0) == 0) p[k.substr(prefix.size())] = v.number(k);
  return p;
}

}  // namespace detail

/// Validates a key-value document against the experiment schema. All
/// problems are collected and reported together, each prefixed by its field.
inline ExperimentConfig build_config(const KeyValues& user, const KeyValues& overrides = {}) {
  std::vector<std::string> errors;
  std::string experiment;
  if (const auto it = overrides.find("experiment"); it != overrides.end())
    experiment = it->second;
  else if (const auto jt = user.find("experiment"); jt != user.end())
    experiment = jt->second;
  else
    throw Error(Errc::config, "experiment: missing; known experiments: " + registry::join(experiment_names()));
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    throw Error(Errc::config,
                "experiment: unknown experiment '" + experiment + "'; known: " + registry::join(experiment_names()));

  KeyValues kv = default_values(experiment);
  const auto tol_defaults = default_tolerances(experiment);
  for (const auto& [k, v] : tol_defaults) kv["tolerance." + k] = io::format_number(v);
  kv["experiment"] = experiment;
  for (const auto* source : {&user, &overrides})
    for (const auto& [k, v] : *source) {
      if (!detail::is_known_key(kv, tol_defaults, k)) {
        errors.push_back(k + ": unknown key");
        continue;
      }
      kv[k] = v;
    }

  detail::Validator v(kv);
  ExperimentConfig c;
  c.experiment = experiment;
  c.horizon = v.number("grid.T");
  c.steps = v.unsigned_integer("grid.N");
  c.points = v.unsigned_integer("grid.P");
  c.noise_modes = v.unsigned_integer("truncation.J");
  c.kernel_modes = v.unsigned_integer("truncation.M");
  c.ladder.eps0 = v.number("ladder.eps0");
  c.ladder.ratio = v.number("ladder.ratio");
  if (v.raw("ladder.length") != "floor") c.ladder.length = v.unsigned_integer("ladder.length");
  c.paths = v.unsigned_integer("mc.paths");
  c.seed = v.unsigned_integer("mc.seed");
  c.workers = v.unsigned_integer("mc.workers");
  c.f = v.raw("model.f");
  c.g = v.raw("model.g");
  c.F = v.raw("model.F");
  c.f_params = detail::registry_params(kv, "model.f.", v);
  c.g_params = detail::registry_params(kv, "model.g.", v);
  c.F_params = detail::registry_params(kv, "model.F.", v);
  c.integrands = detail::split_list(v.raw("integrand.names"));
  c.integrand_mode = v.unsigned_integer("integrand.mode");
  c.integrand_cutoff = v.number("integrand.cutoff");
  c.kernel_t_min = v.number("kernel.t_min");
  c.kernel_t_max = v.number("kernel.t_max");
  c.kernel_count = v.unsigned_integer("kernel.count");
  c.semigroup_modes = v.unsigned_integer("kernel.semigroup_modes");
  c.semigroup_t = v.number("kernel.semigroup_t");
  c.spde_z = v.number("spde.z");
  c.residual_paths = v.unsigned_integer("spde.residual_paths");
  c.lipschitz_z = v.numbers("lipschitz.z");
  for (const auto& item : detail::split_list(v.raw("spde.probes"))) {
    const auto colon = item.find(':');
    char* e1 = nullptr;
    char* e2 = nullptr;
    if (colon == std::string::npos) {
      v.fail("spde.probes", "probe '" + item + "' is not of the form t:x");
      continue;
    }
    const std::string ts = item.substr(0, colon), xs = item.substr(colon + 1);
    const double t = std::strtod(ts.c_str(), &e1);
    const double x = std::strtod(xs.c_str(), &e2);
    if (e1 != ts.c_str() + ts.size() || e2 != xs.c_str() + xs.size()) {
      v.fail("spde.probes", "probe '" + item + "' is not of the form t:x");
      continue;
    }
    c.probes.emplace_back(t, x);
  }
  for (const auto& [k, _] : tol_defaults) c.tolerances[k] = v.number("tolerance." + k);
  c.output_dir = v.raw("output.dir");

  // Invariants.
  v.check(c.horizon > 0.0, "grid.T", "must be positive");
  v.check(c.steps >= 2, "grid.N", "must be at least 2");
  v.check(c.points >= 4, "grid.P", "must be at least 4");
  v.check(c.noise_modes >= 1, "truncation.J", "must be at least 1");
  v.check(c.noise_modes <= c.kernel_modes, "truncation.J",
          "J = " + std::to_string(c.noise_modes) + " exceeds M = " + std::to_string(c.kernel_modes));
  v.check(c.paths >= 1, "mc.paths", "Monte Carlo count must be at least 1");
  v.check(c.workers >= 1, "mc.workers", "must be at least 1");
  v.check(c.ladder.eps0 > 0.0 && c.ladder.eps0 <= 1.0, "ladder.eps0", "must lie in (0, 1] (fraction of T)");
  v.check(c.ladder.ratio > 0.0 && c.ladder.ratio < 1.0, "ladder.ratio", "must lie in (0, 1)");
  if (c.ladder.length) v.check(*c.ladder.length >= 1, "ladder.length", "must be at least 1 or 'floor'");
  if (v.errors().empty() && c.horizon > 0.0 && c.steps >= 2) {
    const TimeGrid grid(c.horizon, c.steps);
    const double floor = EpsilonLadder::floor_factor * grid.dt();
    if (c.ladder.length) {
      const double smallest = c.ladder.eps0 * c.horizon * std::pow(c.ladder.ratio, double(*c.ladder.length - 1));
      v.check(smallest >= floor * (1.0 - 1e-12), "ladder.length",
              "smallest eps " + io::format_number(smallest) + " is below the floor 10*dt = " + io::format_number(floor));
    } else {
      v.check(c.ladder.eps0 * c.horizon >= floor, "ladder.eps0",
              "eps0*T is below the floor 10*dt = " + io::format_number(floor));
    }
  }
  const bool spde = experiment == "spde-adapted" || experiment == "spde-anticipating" || experiment == "lipschitz";
  if (spde) {
    v.check(c.kernel_modes < c.points, "truncation.M", "must be below the number of space cells P");
    v.check(c.residual_paths >= 1, "spde.residual_paths", "must be at least 1");
    for (const auto& [field, fn] : std::initializer_list<std::pair<const char*, int>>{
             {"model.f", 0}, {"model.g", 1}, {"model.F", 2}}) {
      try {
        if (fn == 0) registry::initial_profile(c.f, c.f_params);
        if (fn == 1) registry::noise_coefficient(c.g, c.g_params);
        if (fn == 2) registry::initial_randomness(c.F, c.F_params);
      } catch (const Error& e) {
        v.fail(field, e.what());
      }
    }
    if (experiment == "lipschitz") {
      v.check(c.lipschitz_z.size() >= 2, "lipschitz.z", "needs at least two points");
      for (std::size_t i = 1; i < c.lipschitz_z.size(); ++i)
        v.check(c.lipschitz_z[i] > c.lipschitz_z[i - 1], "lipschitz.z", "must be strictly increasing");
    } else {
      v.check(!c.probes.empty(), "spde.probes", "needs at least one probe");
      for (const auto& [t, x] : c.probes)
        v.check(t > 0.0 && t <= c.horizon && x >= 0.0 && x <= 1.0, "spde.probes",
                "probe " + io::format_number(t) + ":" + io::format_number(x) + " lies outside (0, T] x [0, 1]");
    }
  }
  if (experiment == "proposition1" || experiment == "isometry") {
    v.check(!c.integrands.empty(), "integrand.names", "needs at least one integrand");
    for (const auto& n : c.integrands) {
      const auto& known = integrand_names();
      v.check(std::find(known.begin(), known.end(), n) != known.end(), "integrand.names",
              "unknown integrand '" + n + "'; known: " + registry::join(known));
    }
    v.check(c.integrand_mode >= 1 && c.integrand_mode <= c.noise_modes, "integrand.mode", "must lie in 1..J");
  }
  if (experiment == "kernel-bounds") {
    v.check(c.kernel_t_min > 0.0 && c.kernel_t_max > c.kernel_t_min, "kernel.t_min",
            "need 0 < t_min < t_max");
    v.check(c.kernel_count >= 2, "kernel.count", "need at least two times");
    v.check(c.semigroup_modes >= 1, "kernel.semigroup_modes", "must be at least 1");
  }

  errors.insert(errors.end(), v.errors().begin(), v.errors().end());
  if (!errors.empty()) {
    std::string msg = "invalid " + experiment + " config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(Errc::config, msg);
  }
  c.resolved = std::move(kv);
  return c;
}

inline ExperimentConfig parse_config(std::string_view text, const KeyValues& overrides = {}) {
  return build_config(parse_key_values(text), overrides);
}

inline ExperimentConfig load_config(const std::string& path, const KeyValues& overrides = {}) {
  std::ifstream in(path);
  rvcyl::detail::require(static_cast<bool>(in), Errc::config, "cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

}  // namespace rvcyl::harness
