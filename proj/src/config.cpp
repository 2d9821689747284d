#include "rklab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "rklab/errors.hpp"

namespace rklab {

using nlohmann::json;

namespace {

// Typed field access with error messages naming the full field path.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return where_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key) + " must be finite");
    return x;
  }
  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(path(key) + " must be positive");
    return x;
  }
  double nonnegative(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x >= 0.0)) throw ConfigError(path(key) + " must be >= 0");
    return x;
  }
  std::optional<double> optional_positive(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return positive(key, 0.0);
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) throw ConfigError(path(key) + " must be a positive integer");
    return v.get<std::size_t>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback, bool allow_zero) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(path(key) + " must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path(key) + " must contain only numbers");
      const double x = e.get<double>();
      if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
        throw ConfigError(path(key) + (allow_zero ? " entries must be >= 0" : " entries must be positive"));
      out.push_back(x);
    }
    return out;
  }
  std::string text(const std::string& key, std::string fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(path(key) + " must be a string");
    return j_.at(key).get<std::string>();
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown field " + path(k));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::pair<double, double> interval(Fields& f, const std::string& key, std::pair<double, double> fallback) {
  if (!f.has(key)) return fallback;
  const auto& v = f.raw(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(f.path(key) + " must be [lo, hi]");
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (!(lo >= 0.0 && hi > lo && std::isfinite(hi))) throw ConfigError(f.path(key) + " must satisfy 0 <= lo < hi");
  return {lo, hi};
}

std::vector<MarkBox> parse_boxes(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty array");
  std::vector<MarkBox> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Fields f(j[i], where + "[" + std::to_string(i) + "]");
    MarkBox b;
    std::tie(b.a_lo, b.a_hi) = interval(f, "a", {b.a_lo, b.a_hi});
    std::tie(b.z_lo, b.z_hi) = interval(f, "z", {b.z_lo, b.z_hi});
    std::tie(b.u_lo, b.u_hi) = interval(f, "u", {b.u_lo, b.u_hi});
    f.reject_unknown();
    out.push_back(b);
  }
  return out;
}

HarnessConfig parse_harness(const json& j) {
  Fields f(j, "harness");
  HarnessConfig h;
  h.x = f.positive("x", h.x);
  h.levels = f.numbers("levels", h.levels, true);
  h.lambdas = f.numbers("lambdas", h.lambdas, true);
  h.paths = f.count("paths", h.paths);
  h.dts = f.numbers("dts", h.dts, false);
  h.output = f.text("output", h.output);
  h.bandwidth = f.optional_positive("bandwidth");
  h.bandwidth_scale = f.positive("bandwidth_scale", h.bandwidth_scale);
  h.identity_bandwidth_scale = f.positive("identity_bandwidth_scale", h.identity_bandwidth_scale);
  h.oracle_alpha_shift = f.number("oracle_alpha_shift", h.oracle_alpha_shift);
  h.mean_budget = f.nonnegative("mean_budget", h.mean_budget);
  h.laplace_budget = f.nonnegative("laplace_budget", h.laplace_budget);
  h.residual_bound = f.positive("residual_bound", h.residual_bound);
  h.discard_limit = f.nonnegative("discard_limit", h.discard_limit);
  h.coverage_limit = f.nonnegative("coverage_limit", h.coverage_limit);
  if (f.has("boxes")) h.poisson.boxes = parse_boxes(f.raw("boxes"), "harness.boxes");

  if (f.has("noise")) {
    Fields n(f.raw("noise"), "harness.noise");
    h.noise.a = n.positive("a", h.noise.a);
    h.noise.u_max = n.positive("u_max", h.noise.u_max);
    h.noise.horizon = n.positive("horizon", h.noise.horizon);
    h.noise.dt = n.optional_positive("dt");
    n.reject_unknown();
  }
  if (f.has("poisson")) {
    Fields p(f.raw("poisson"), "harness.poisson");
    if (p.has("mechanism")) h.poisson.mechanism = parse_mechanism(p.raw("mechanism"), "harness.poisson.mechanism");
    if (p.has("boxes")) h.poisson.boxes = parse_boxes(p.raw("boxes"), "harness.poisson.boxes");
    h.poisson.horizon = p.positive("horizon", h.poisson.horizon);
    h.poisson.dt = p.optional_positive("dt");
    p.reject_unknown();
  }
  if (f.has("reflected")) {
    Fields r(f.raw("reflected"), "harness.reflected");
    h.reflected.time = r.positive("time", h.reflected.time);
    h.reflected.dts = r.numbers("dts", h.reflected.dts, false);
    h.reflected.paths = r.count("paths", h.reflected.paths);
    h.reflected.bound = r.positive("bound", h.reflected.bound);
    if (r.has("jump_mechanism"))
      h.reflected.jump_mechanism = parse_mechanism(r.raw("jump_mechanism"), "harness.reflected.jump_mechanism");
    r.reject_unknown();
  }
  if (f.has("example")) {
    Fields e(f.raw("example"), "harness.example");
    h.example.time = e.positive("time", h.example.time);
    h.example.dt = e.positive("dt", h.example.dt);
    h.example.paths = e.count("paths", h.example.paths);
    h.example.level = e.positive("level", h.example.level);
    e.reject_unknown();
  }
  f.reject_unknown();

  if (h.discard_limit > 1.0) throw ConfigError("harness.discard_limit must be <= 1");
  if (h.coverage_limit > 1.0) throw ConfigError("harness.coverage_limit must be <= 1");
  if (h.example.level >= 1.0) throw ConfigError("harness.example.level must be < 1");
  for (const auto& b : h.poisson.boxes)
    if (!(b.a_lo > 0.0 || b.a_hi > 0.0)) throw ConfigError("harness.boxes: empty level range");
  return h;
}

}  // namespace

BranchingMechanism parse_mechanism(const json& j, const std::string& where) {
  Fields f(j, where);
  BranchingMechanism m;
  m.alpha = f.nonnegative("alpha", 0.0);
  m.beta = f.nonnegative("beta", 0.0);
  if (f.has("jumps")) {
    Fields jf(f.raw("jumps"), where + ".jumps");
    if (jf.has("atoms")) {
      const auto& atoms = jf.raw("atoms");
      if (!atoms.is_array()) throw ConfigError(jf.path("atoms") + " must be an array");
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        Fields a(atoms[i], jf.path("atoms") + "[" + std::to_string(i) + "]");
        if (!a.has("z") || !a.has("w")) throw ConfigError(jf.path("atoms") + " entries need z and w");
        m.jumps.atoms.push_back({a.positive("z", 0.0), a.positive("w", 0.0)});
        a.reject_unknown();
      }
    }
    if (jf.has("power_law")) {
      Fields p(jf.raw("power_law"), jf.path("power_law"));
      PowerLaw pl;
      pl.coefficient = p.positive("c", 0.0);
      if (!p.has("sigma")) throw ConfigError(p.path("sigma") + " is required");
      pl.index = p.number("sigma", pl.index);
      pl.z_min = p.nonnegative("z_min", 0.0);
      if (p.has("z_max")) pl.z_max = p.positive("z_max", 0.0);
      p.reject_unknown();
      m.jumps.power_law = pl;
    }
    jf.reject_unknown();
  }
  f.reject_unknown();
  try {
    m.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return m;
}

SimConfig parse_sim(const json& j) {
  Fields f(j, "sim");
  SimConfig s;
  s.dt = f.positive("dt", s.dt);
  s.horizon = f.positive("horizon", s.horizon);
  if (f.has("truncation_delta")) s.truncation_delta = f.nonnegative("truncation_delta", 0.0);
  const std::string mode = f.text("small_jump_mode", "drop_compensated");
  if (mode == "drop_compensated")
    s.small_jump_mode = SmallJumpMode::drop_compensated;
  else if (mode == "gaussian_correction")
    s.small_jump_mode = SmallJumpMode::gaussian_correction;
  else
    throw ConfigError("sim.small_jump_mode must be drop_compensated or gaussian_correction");
  if (f.has("seed")) {
    const auto& v = f.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("sim.seed must be a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  }
  f.reject_unknown();
  s.validate();
  return s;
}

RunConfig parse_run_config(const json& j) {
  Fields f(j, "config");
  RunConfig c;
  if (!f.has("mechanism")) throw ConfigError("config.mechanism is required");
  c.mechanism = parse_mechanism(f.raw("mechanism"));
  if (f.has("sim")) c.sim = parse_sim(f.raw("sim"));
  if (f.has("harness")) c.harness = parse_harness(f.raw("harness"));
  f.reject_unknown();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

nlohmann::ordered_json mechanism_to_json(const BranchingMechanism& m) {
  nlohmann::ordered_json j;
  j["alpha"] = m.alpha;
  j["beta"] = m.beta;
  nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
  for (const auto& a : m.jumps.atoms) atoms.push_back({{"z", a.size}, {"w", a.weight}});
  nlohmann::ordered_json jumps;
  jumps["atoms"] = atoms;
  if (m.jumps.power_law) {
    const auto& p = *m.jumps.power_law;
    jumps["power_law"] = {{"c", p.coefficient},
                          {"sigma", p.index},
                          {"z_min", p.z_min},
                          {"z_max", std::isfinite(p.z_max) ? nlohmann::ordered_json(p.z_max) : nullptr}};
  } else {
    jumps["power_law"] = nullptr;
  }
  j["jumps"] = jumps;
  return j;
}

nlohmann::ordered_json sim_to_json(const SimConfig& s) {
  nlohmann::ordered_json j;
  j["dt"] = s.dt;
  j["horizon"] = s.horizon;
  j["truncation_delta"] = s.truncation_delta ? nlohmann::ordered_json(*s.truncation_delta) : nullptr;
  j["small_jump_mode"] = s.small_jump_mode == SmallJumpMode::drop_compensated ? "drop_compensated" : "gaussian_correction";
  j["seed"] = s.seed;
  return j;
}

}  // namespace rklab
