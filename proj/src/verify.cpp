#include "rklab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rklab/cb_flow.hpp"
#include "rklab/errors.hpp"
#include "rklab/parallel.hpp"
#include "rklab/stats.hpp"

namespace rklab {

using ojson = nlohmann::ordered_json;

ReportCell& MonteCarloReport::add(ojson params, double stat, double oracle, double std_error, double tol,
                                  CellRule rule) {
  ReportCell c;
  c.params = std::move(params);
  c.stat = stat;
  c.oracle = oracle;
  c.std_error = std_error;
  c.tol = tol;
  c.rule = rule;
  switch (rule) {
    case CellRule::within: c.pass = std::abs(stat - oracle) <= tol; break;
    case CellRule::at_most: c.pass = stat <= oracle + tol; break;
    case CellRule::decreasing: c.pass = stat < oracle; break;
    case CellRule::report: c.pass = true; break;
  }
  if (!std::isfinite(stat)) c.pass = rule == CellRule::report;
  cells.push_back(std::move(c));
  return cells.back();
}

bool MonteCarloReport::pass() const {
  return valid() && std::all_of(cells.begin(), cells.end(), [](const ReportCell& c) { return c.pass; });
}

namespace {

const char* rule_name(CellRule r) {
  switch (r) {
    case CellRule::within: return "within";
    case CellRule::at_most: return "at_most";
    case CellRule::decreasing: return "decreasing";
    case CellRule::report: return "report";
  }
  return "";
}

// JSON has no infinities or NaNs.
ojson number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

}  // namespace

ojson MonteCarloReport::to_json() const {
  ojson j;
  j["check"] = check;
  j["M"] = M;
  j["pass"] = pass();
  ojson cs = ojson::array();
  for (const auto& c : cells) {
    ojson o;
    o["params"] = c.params;
    o["rule"] = rule_name(c.rule);
    o["stat"] = number(c.stat);
    o["oracle"] = number(c.oracle);
    o["stderr"] = number(c.std_error);
    o["tol"] = number(c.tol);
    o["pass"] = c.pass;
    cs.push_back(std::move(o));
  }
  j["cells"] = std::move(cs);
  j["discarded"] = discarded;
  j["flags"] = flags;
  j["config"] = config;
  return j;
}

const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> s{Suite::ray_knight, Suite::theorem1, Suite::tanaka,   Suite::noise,
                                    Suite::poisson_marks, Suite::reflected, Suite::example};
  return s;
}

std::string suite_name(Suite s) {
  switch (s) {
    case Suite::ray_knight: return "ray-knight";
    case Suite::theorem1: return "theorem1";
    case Suite::tanaka: return "tanaka";
    case Suite::noise: return "noise";
    case Suite::poisson_marks: return "poisson-marks";
    case Suite::reflected: return "reflected";
    case Suite::example: return "example";
  }
  return "";
}

Suite parse_suite(const std::string& name) {
  for (Suite s : all_suites())
    if (suite_name(s) == name) return s;
  throw ConfigError("unknown verify suite '" + name + "'");
}

namespace {

BranchingMechanism oracle_mechanism(const BranchingMechanism& mech, const HarnessConfig& h) {
  BranchingMechanism o = mech;
  o.alpha += h.oracle_alpha_shift;
  return o;
}

BranchingMechanism simulated_mechanism(const BranchingMechanism& mech, const SimConfig& sim) {
  return truncated_mechanism(mech, effective_truncation(mech, sim),
                             sim.small_jump_mode == SmallJumpMode::gaussian_correction);
}

void require_gaussian(const BranchingMechanism& sim_mech, const std::string& check) {
  if (!(sim_mech.beta > 0.0))
    throw UnsupportedConfiguration(check + ": needs a Gaussian part (beta > 0)");
}

ojson echo(const BranchingMechanism& mech, const SimConfig& sim, const HarnessConfig& h) {
  ojson j;
  j["mechanism"] = mechanism_to_json(mech);
  j["dt"] = sim.dt;
  j["truncation_delta"] = effective_truncation(mech, sim);
  j["seed"] = sim.seed;
  j["oracle_alpha_shift"] = h.oracle_alpha_shift;
  return j;
}

SimConfig with_dt(SimConfig s, double dt) {
  s.dt = dt;
  return s;
}

// Mean of window-averaged L: x e^{-alpha a} (1 - e^{-alpha w}) / (alpha w).
double window_mean(double x, double alpha, double a, double w) {
  const double avg = alpha * w < 1e-12 ? 1.0 : -std::expm1(-alpha * w) / (alpha * w);
  return x * std::exp(-alpha * a) * avg;
}

std::vector<double> with_zero(std::vector<double> levels) {
  levels.push_back(0.0);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

void check_discards(MonteCarloReport& r, std::size_t discarded, std::size_t total, const HarnessConfig& h,
                    const std::string& what) {
  r.discarded += discarded;
  if (static_cast<double>(discarded) > h.discard_limit * static_cast<double>(total))
    r.flags.push_back("excessive discard rate (" + std::to_string(discarded) + " of " + std::to_string(total) +
                      " paths " + what + ")");
}

// Samples of the kept paths, in index order.
template <class T, class F>
std::vector<double> collect(const std::vector<T>& items, F value) {
  std::vector<double> out;
  for (const auto& it : items)
    if (it.kept) out.push_back(value(it));
  return out;
}

}  // namespace

double suite_bandwidth(const HarnessConfig& h, double dt, double beta, bool identity_suite) {
  if (h.bandwidth) return *h.bandwidth;
  return (identity_suite ? h.identity_bandwidth_scale : h.bandwidth_scale) * default_bin_width(dt, beta);
}

double theorem1_rhs(const LevyPath& path, const HeightProcess& hp, double x, const LevelWindow& window) {
  CompensatedSum s;
  s.add(x);
  for (std::size_t k = 0; k < hp.cells(); ++k) s.add((1.0 - window.above(hp.height[k])) * hp.continuous[k]);
  for (std::size_t j = 0; j < hp.jump_height.size(); ++j)
    s.add((1.0 - window.above(hp.jump_height[j])) * path.jumps[j].size);
  return s.value();
}

std::vector<double> theorem1_residual(const LevyPath& path, const HeightProcess& hp, double x,
                                      const std::vector<double>& levels, double width) {
  std::vector<double> out;
  for (double a : levels) {
    const LevelWindow win{a, width};
    out.push_back(window_occupation(hp, win) - theorem1_rhs(path, hp, x, win));
  }
  return out;
}

ReflectedIdentity reflected_identity(const LevyPath& path, std::size_t cells, double eps) {
  double sup = 0.0, cont = 0.0, occ = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    const double r = sup - path.values[k];
    if (r > 0.0 && r <= eps) occ += path.dt;
    for (; j < path.jumps.size() && path.jumps[j].cell == k; ++j) {
      const double pre = path.jumps[j].pre_value;
      if (pre > sup) {
        cont += pre - sup;
        sup = pre;
      }
      sup = std::max(sup, pre + path.jumps[j].size);
    }
    if (path.values[k + 1] > sup) {
      cont += path.values[k + 1] - sup;
      sup = path.values[k + 1];
    }
  }
  return {cont, occ / eps};
}

double drifted_supremum_tail(double y, double mu, double sigma2, double t) {
  if (y <= 0.0) return 1.0;
  const double s = std::sqrt(sigma2 * t);
  const double first = normal_cdf((-y + mu * t) / s);
  // e^{2 mu y / sigma^2} Phi(.) can overflow/underflow separately; combine in logs
  const double second_arg = (-y - mu * t) / s;
  const double log_second = 2.0 * mu * y / sigma2 + std::log(std::max(normal_cdf(second_arg), 1e-300));
  return first + std::exp(log_second);
}

double drifted_supremum_mean(double mu, double sigma2, double t) {
  using boost::math::quadrature::gauss_kronrod;
  auto tail = [&](double y) { return drifted_supremum_tail(y, mu, sigma2, t); };
  return gauss_kronrod<double, 61>::integrate(tail, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12);
}

// ---------------------------------------------------------------------------

MonteCarloReport ray_knight_report(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  const auto& mech = cfg.mechanism;
  const auto sim_mech = simulated_mechanism(mech, cfg.sim);
  require_gaussian(sim_mech, "ray-knight");
  if (!grey_holds(mech)) throw PreconditionError("ray-knight: Grey's condition fails");
  const auto oracle = oracle_mechanism(mech, h);
  const double w = suite_bandwidth(h, cfg.sim.dt, sim_mech.beta, false);
  const std::size_t M = h.paths;

  MonteCarloReport r;
  r.check = "ray-knight";
  r.M = M;
  r.config = echo(mech, cfg.sim, h);
  r.config["bandwidth"] = w;

  struct PathOut {
    bool kept = false;
    std::vector<double> L;
  };
  std::vector<PathOut> paths(M);
  parallel_for(M, jobs, [&](std::size_t i) {
    const LevyPath p = sample_path_until_hit(mech, cfg.sim, h.x, i);
    const HeightProcess hp = explore(p, -h.x);
    if (!hp.stopped) return;
    paths[i].kept = true;
    for (double a : h.levels) paths[i].L.push_back(window_occupation(hp, {a, w}));
  });
  std::size_t lost = 0;
  for (const auto& p : paths) lost += !p.kept;
  check_discards(r, lost, M, h, "not reaching -x within the horizon");

  const double top = *std::max_element(h.levels.begin(), h.levels.end());
  SimConfig cb_cfg = cfg.sim;
  cb_cfg.horizon = std::max(top, cfg.sim.dt) + 0.5 * cfg.sim.dt;
  std::vector<std::vector<double>> cb(M);
  parallel_for(M, jobs, [&](std::size_t i) {
    const CBTrajectory traj = simulate_cb(mech, h.x, cb_cfg, i);
    for (double a : h.levels) cb[i].push_back(traj.at(a));
  });

  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    const double a = h.levels[l];
    const auto Lh = collect(paths, [&](const PathOut& p) { return p.L[l]; });
    std::vector<double> Xc;
    for (const auto& c : cb) Xc.push_back(c[l]);
    const double mean_oracle = cb_mean(oracle, h.x, a);
    const auto mh = sample_moments(Lh), mc = sample_moments(Xc);
    r.add({{"side", "height"}, {"a", a}, {"stat", "mean"}}, mh.mean, mean_oracle, mh.stderr_mean(),
          3 * mh.stderr_mean() + h.mean_budget * mean_oracle);
    r.add({{"side", "cb"}, {"a", a}, {"stat", "mean"}}, mc.mean, mean_oracle, mc.stderr_mean(),
          3 * mc.stderr_mean() + h.mean_budget * mean_oracle);
    for (double lam : h.lambdas) {
      std::vector<double> eh, ec;
      for (double v : Lh) eh.push_back(std::exp(-lam * v));
      for (double v : Xc) ec.push_back(std::exp(-lam * v));
      const auto sh = sample_moments(eh), sc = sample_moments(ec);
      const double exact = cb_laplace(oracle, h.x, a, lam);
      const double budget = h.laplace_budget * exact;
      r.add({{"side", "height"}, {"a", a}, {"lambda", lam}}, sh.mean, exact, sh.stderr_mean(),
            3 * sh.stderr_mean() + budget);
      r.add({{"side", "cb"}, {"a", a}, {"lambda", lam}}, sc.mean, exact, sc.stderr_mean(),
            3 * sc.stderr_mean() + budget);
      const double se = std::hypot(sh.stderr_mean(), sc.stderr_mean());
      r.add({{"side", "height-vs-cb"}, {"a", a}, {"lambda", lam}}, sh.mean, sc.mean, se, 3 * se + budget);
    }
  }
  return r;
}

namespace {

// Explored first-passage paths at one dt, with a per-path payload.
template <class Out, class F>
std::vector<Out> first_passage_batch(const RunConfig& cfg, const SimConfig& sim, unsigned jobs, F per_path) {
  std::vector<Out> out(cfg.harness.paths);
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const LevyPath p = sample_path_until_hit(cfg.mechanism, sim, cfg.harness.x, i);
    const HeightProcess hp = explore(p, -cfg.harness.x);
    if (!hp.stopped) return;
    out[i].kept = true;
    per_path(p, hp, out[i]);
  });
  return out;
}

template <class Out>
std::size_t count_lost(const std::vector<Out>& v) {
  std::size_t n = 0;
  for (const auto& o : v) n += !o.kept;
  return n;
}

}  // namespace

MonteCarloReport theorem1_report(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  const auto sim_mech = simulated_mechanism(cfg.mechanism, cfg.sim);
  require_gaussian(sim_mech, "theorem1");
  const auto oracle = oracle_mechanism(cfg.mechanism, h);
  const auto levels = with_zero(h.levels);

  MonteCarloReport r;
  r.check = "theorem1";
  r.M = h.paths;
  r.config = echo(cfg.mechanism, cfg.sim, h);
  r.config["dts"] = h.dts;
  r.config["levels"] = levels;

  struct Out {
    bool kept = false;
    double mean_abs = 0.0;
    std::vector<double> rhs;
  };
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < h.dts.size(); ++d) {
    const double dt = h.dts[d];
    const SimConfig sim = with_dt(cfg.sim, dt);
    const double w = suite_bandwidth(h, dt, simulated_mechanism(cfg.mechanism, sim).beta, true);
    const auto batch = first_passage_batch<Out>(cfg, sim, jobs, [&](const LevyPath& p, const HeightProcess& hp, Out& o) {
      CompensatedSum s;
      for (double a : levels) {
        const LevelWindow win{a, w};
        const double rhs = theorem1_rhs(p, hp, h.x, win);
        s.add(std::abs(window_occupation(hp, win) - rhs));
        o.rhs.push_back(rhs);
      }
      o.mean_abs = s.value() / static_cast<double>(levels.size());
    });
    check_discards(r, count_lost(batch), batch.size(), h, "not reaching -x at dt=" + std::to_string(dt));
    const auto m = sample_moments(collect(batch, [](const Out& o) { return o.mean_abs; }));
    const ojson params{{"dt", dt}, {"bandwidth", w}, {"stat", "mean |residual|"}};
    r.add(params, m.mean, 0.0, m.stderr_mean(), 0.0, CellRule::report);
    if (d > 0) r.add({{"dt", dt}, {"stat", "mean |residual| decreases"}}, m.mean, previous, m.stderr_mean(), 0.0,
                     CellRule::decreasing);
    previous = m.mean;
    if (d + 1 == h.dts.size()) {
      r.add({{"dt", dt}, {"stat", "mean |residual| bound"}}, m.mean, h.residual_bound * h.x, m.stderr_mean(), 0.0,
            CellRule::at_most);
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto rhs = sample_moments(collect(batch, [&](const Out& o) { return o.rhs[l]; }));
        const double target = window_mean(h.x, oracle.alpha, levels[l], w);
        r.add({{"dt", dt}, {"a", levels[l]}, {"stat", "mean of x + int 1{H<=a} dxi"}}, rhs.mean, target,
              rhs.stderr_mean(), 3 * rhs.stderr_mean() + h.mean_budget * target);
      }
    }
  }
  return r;
}

MonteCarloReport tanaka_refinement_study(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  const auto sim_mech = simulated_mechanism(cfg.mechanism, cfg.sim);
  require_gaussian(sim_mech, "tanaka");
  const auto oracle = oracle_mechanism(cfg.mechanism, h);
  const auto levels = with_zero(h.levels);

  MonteCarloReport r;
  r.check = "tanaka";
  r.M = h.paths;
  r.config = echo(cfg.mechanism, cfg.sim, h);
  r.config["dts"] = h.dts;
  r.config["levels"] = levels;

  struct Out {
    bool kept = false;
    double mean_abs = 0.0;
    double mean_occ = 0.0;
    double plus_minus = 0.0;
    std::vector<double> plus;
  };
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < h.dts.size(); ++d) {
    const double dt = h.dts[d];
    const SimConfig sim = with_dt(cfg.sim, dt);
    const double w = suite_bandwidth(h, dt, simulated_mechanism(cfg.mechanism, sim).beta, true);
    const auto batch = first_passage_batch<Out>(cfg, sim, jobs, [&](const LevyPath& p, const HeightProcess& hp, Out& o) {
      CompensatedSum dev, occ;
      for (double a : levels) {
        const LevelWindow win{a, w};
        const double L = window_occupation(hp, win);
        const double tp = tanaka_local_time(p, hp, win, TanakaVariant::plus);
        const double tm = tanaka_local_time(p, hp, win, TanakaVariant::minus);
        dev.add(std::abs(tp - L));
        occ.add(L);
        o.plus_minus = std::max(o.plus_minus, std::abs(tp - tm));
        o.plus.push_back(tp);
      }
      o.mean_abs = dev.value() / static_cast<double>(levels.size());
      o.mean_occ = occ.value() / static_cast<double>(levels.size());
    });
    check_discards(r, count_lost(batch), batch.size(), h, "not reaching -x at dt=" + std::to_string(dt));
    const auto m = sample_moments(collect(batch, [](const Out& o) { return o.mean_abs; }));
    const auto occ = sample_moments(collect(batch, [](const Out& o) { return o.mean_occ; }));
    const auto pm = collect(batch, [](const Out& o) { return o.plus_minus; });
    r.add({{"dt", dt}, {"bandwidth", w}, {"stat", "mean |tanaka - occupation|"}}, m.mean, 0.0, m.stderr_mean(), 0.0,
          CellRule::report);
    r.add({{"dt", dt}, {"stat", "relative to mean local time"}}, m.mean / occ.mean, 0.0, 0.0, 0.0, CellRule::report);
    if (d > 0) r.add({{"dt", dt}, {"stat", "deviation decreases"}}, m.mean, previous, m.stderr_mean(), 0.0,
                     CellRule::decreasing);
    previous = m.mean;
    r.add({{"dt", dt}, {"stat", "max |plus - minus|"}}, pm.empty() ? 0.0 : *std::max_element(pm.begin(), pm.end()),
          1e-9, 0.0, 0.0, CellRule::at_most);
    if (d + 1 == h.dts.size()) {
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto tp = sample_moments(collect(batch, [&](const Out& o) { return o.plus[l]; }));
        const double target = window_mean(h.x, oracle.alpha, levels[l], w);
        r.add({{"dt", dt}, {"a", levels[l]}, {"stat", "mean tanaka local time"}}, tp.mean, target, tp.stderr_mean(),
              3 * tp.stderr_mean() + h.mean_budget * target);
      }
    }
  }
  return r;
}

namespace {

// Drives one fresh path cell by cell, keeping the running binned occupation
// of the explored height over `bins` bins of width `width`. `on_cell` sees
// cell k with the occupation before the cell's own contribution. Stops once
// every bin holds `target` local time and `extra_done()` agrees, or at the
// horizon. Returns whether the stopping condition was met.
template <class OnCell, class Done>
bool explore_until_saturated(const BranchingMechanism& mech, const SimConfig& sim, std::uint64_t index, double beta,
                             double width, std::size_t bins, double target, OnCell on_cell, Done extra_done) {
  PathSampler sampler(mech, sim, stream_id(StreamDomain::levy_path, index));
  LevyPath path = sampler.start();
  Explorer ex(beta, sim.dt);
  std::vector<double> occ(bins, 0.0);
  std::size_t full = 0;
  const double needed = target * width;
  std::size_t first_jump = 0;
  while (full < bins || !extra_done()) {
    if (!sampler.extend(path)) return false;
    const std::size_t k = path.cells() - 1;
    ex.step(path);
    const HeightProcess& hp = ex.result();
    on_cell(path, hp, k, first_jump, occ);
    first_jump = path.jumps.size();
    const double H = hp.height[k];
    if (H > 0.0) {
      const double q = std::ceil(H / width) - 1.0;
      if (q < static_cast<double>(bins)) {
        auto& o = occ[static_cast<std::size_t>(std::max(q, 0.0))];
        const bool was = o >= needed;
        o += hp.duration[k];
        if (!was && o >= needed) ++full;
      }
    }
  }
  return true;
}

std::optional<std::size_t> bin_index(double H, double width, std::size_t bins) {
  if (!(H > 0.0)) return std::nullopt;
  const double q = std::ceil(H / width) - 1.0;
  if (q >= static_cast<double>(bins)) return std::nullopt;
  return static_cast<std::size_t>(std::max(q, 0.0));
}

}  // namespace

MonteCarloReport white_noise_check(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  SimConfig sim = cfg.sim;
  sim.dt = h.noise.dt.value_or(cfg.sim.dt);
  sim.horizon = h.noise.horizon;
  const auto sim_mech = simulated_mechanism(cfg.mechanism, sim);
  require_gaussian(sim_mech, "noise");
  const auto oracle = simulated_mechanism(oracle_mechanism(cfg.mechanism, h), sim);
  const double drift_o = -oracle.alpha - oracle.jumps.tail_first_moment(0.0);
  const double coeff_o = std::sqrt(2.0 * oracle.beta);
  const double a = h.noise.a, u_max = h.noise.u_max;
  const double w0 = suite_bandwidth(h, sim.dt, sim_mech.beta, false);
  const std::size_t bins = static_cast<std::size_t>(std::ceil(a / w0 - 1e-9));
  const double width = a / static_cast<double>(bins);
  const std::size_t M = h.paths;

  MonteCarloReport r;
  r.check = "noise";
  r.M = M;
  r.config = echo(cfg.mechanism, sim, h);
  r.config["bandwidth"] = width;
  r.config["a"] = a;
  r.config["u_max"] = u_max;

  struct Out {
    bool kept = false;
    double W = 0.0;
  };
  std::vector<Out> out(M);
  parallel_for(M, jobs, [&](std::size_t i) {
    CompensatedSum W;
    auto on_cell = [&](const LevyPath& p, const HeightProcess& hp, std::size_t k, std::size_t,
                       const std::vector<double>& occ) {
      const auto b = bin_index(hp.height[k], width, bins);
      if (!b || occ[*b] / width >= u_max) return;
      W.add((p.continuous_increment(k) - drift_o * p.dt) / coeff_o);
    };
    out[i].kept = explore_until_saturated(cfg.mechanism, sim, i, sim_mech.beta, width, bins, u_max, on_cell,
                                          [] { return true; });
    out[i].W = W.value();
  });
  check_discards(r, count_lost(out), M, h, "not saturated within the horizon");
  const auto m = sample_moments(collect(out, [](const Out& o) { return o.W; }));
  const double var_oracle = a * u_max;
  r.add({{"stat", "mean"}}, m.mean, 0.0, m.stderr_mean(), 3 * m.stderr_mean());
  r.add({{"stat", "variance"}}, m.variance, var_oracle, m.stderr_variance(),
        3 * m.stderr_variance() + 0.05 * var_oracle);
  const double skew_tol = 3.0 * std::sqrt(6.0 / static_cast<double>(m.n));
  r.add({{"stat", "|skewness|"}}, std::abs(m.skewness), 0.0, std::sqrt(6.0 / static_cast<double>(m.n)), skew_tol,
        CellRule::at_most);
  r.add({{"stat", "excess kurtosis"}}, m.excess_kurtosis, 0.0, std::sqrt(24.0 / static_cast<double>(m.n)), 0.0,
        CellRule::report);
  return r;
}

MonteCarloReport poisson_marks_check(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  const BranchingMechanism mech = h.poisson.mechanism.value_or(cfg.mechanism);
  SimConfig sim = cfg.sim;
  sim.dt = h.poisson.dt.value_or(cfg.sim.dt);
  sim.horizon = h.poisson.horizon;
  const auto sim_mech = simulated_mechanism(mech, sim);
  require_gaussian(sim_mech, "poisson-marks");
  if (sim_mech.jumps.empty()) throw PreconditionError("poisson-marks: the mechanism has no simulated jumps");
  const double delta = effective_truncation(mech, sim);
  const auto oracle = oracle_mechanism(mech, h);
  const auto& boxes = h.poisson.boxes;
  if (boxes.empty()) throw PreconditionError("poisson-marks: no boxes configured");
  std::vector<double> edges;
  double top = 0.0, u_top = 0.0;
  for (const auto& b : boxes) {
    if (b.z_lo < delta) throw PreconditionError("poisson-marks: box z-range must lie above the truncation delta");
    edges.push_back(b.a_lo);
    edges.push_back(b.a_hi);
    top = std::max(top, b.a_hi);
    u_top = std::max(u_top, b.u_hi);
  }
  const double width = aligned_bin_width(suite_bandwidth(h, sim.dt, sim_mech.beta, false), edges);
  const std::size_t bins = static_cast<std::size_t>(std::llround(top / width));
  const std::size_t M = h.paths;
  const double x = h.x;

  MonteCarloReport r;
  r.check = "poisson-marks";
  r.M = M;
  r.config = echo(mech, sim, h);
  r.config["bandwidth"] = width;

  struct Out {
    bool kept = false;
    std::vector<double> saturated_count, before_hit_count;
  };
  std::vector<Out> out(M);
  parallel_for(M, jobs, [&](std::size_t i) {
    std::vector<double> sat(boxes.size(), 0.0), early(boxes.size(), 0.0);
    double low = 0.0;
    auto on_cell = [&](const LevyPath& p, const HeightProcess& hp, std::size_t k, std::size_t first_jump,
                       const std::vector<double>& occ) {
      for (std::size_t j = first_jump; j < p.jumps.size(); ++j) {
        const double hj = hp.jump_height[j];
        const double z = p.jumps[j].size;
        low = std::min(low, p.jumps[j].pre_value);
        const auto b = bin_index(hj, width, bins);
        const double u = b ? occ[*b] / width : 0.0;
        for (std::size_t q = 0; q < boxes.size(); ++q) {
          const auto& B = boxes[q];
          if (!(hj > B.a_lo && hj <= B.a_hi && z > B.z_lo && z <= B.z_hi)) continue;
          if (u >= B.u_lo && u < B.u_hi) sat[q] += 1.0;
          if (low > -x) early[q] += 1.0;
        }
      }
      low = std::min(low, p.values[k + 1]);
    };
    out[i].kept = explore_until_saturated(mech, sim, i, sim_mech.beta, width, bins, u_top, on_cell,
                                          [&] { return low <= -x; });
    out[i].saturated_count = sat;
    out[i].before_hit_count = early;
  });
  const std::size_t lost = count_lost(out);
  r.discarded = lost;
  const double coverage = 1.0 - static_cast<double>(lost) / static_cast<double>(M);
  for (std::size_t q = 0; q < boxes.size(); ++q) {
    const auto& B = boxes[q];
    const ojson box{{"a", {B.a_lo, B.a_hi}}, {"z", {B.z_lo, B.z_hi}}, {"u", {B.u_lo, B.u_hi}}};
    if (coverage < h.coverage_limit)
      r.flags.push_back("box " + std::to_string(q) + " unreliable: coverage " + std::to_string(coverage));
    const double pz = mech.jumps.mass_between(B.z_lo, B.z_hi);
    const auto c = sample_moments(collect(out, [&](const Out& o) { return o.saturated_count[q]; }));
    const double intensity = (B.a_hi - B.a_lo) * pz * (B.u_hi - B.u_lo);
    r.add({{"box", box}, {"stat", "mean count"}, {"coverage", coverage}}, c.mean, intensity, c.stderr_mean(),
          3 * c.stderr_mean());
    const double fano = c.variance / c.mean;
    r.add({{"box", box}, {"stat", "fano factor"}}, fano, 1.0, 0.0, 0.2);
    const auto e = sample_moments(collect(out, [&](const Out& o) { return o.before_hit_count[q]; }));
    const double al = oracle.alpha;
    const double level_mass = al == 0.0 ? B.a_hi - B.a_lo : (std::exp(-al * B.a_lo) - std::exp(-al * B.a_hi)) / al;
    const double early_oracle = pz * x * level_mass;
    r.add({{"box", box}, {"stat", "mean count before T_x"}}, e.mean, early_oracle, e.stderr_mean(),
          3 * e.stderr_mean() + h.mean_budget * early_oracle);
  }
  return r;
}

MonteCarloReport reflected_supremum_check(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  const auto& spec = h.reflected;
  BranchingMechanism plain = cfg.mechanism;
  plain.jumps = {};
  std::vector<std::pair<std::string, BranchingMechanism>> cases{{"jump-free", plain}};
  if (spec.jump_mechanism)
    cases.emplace_back("jumps", *spec.jump_mechanism);
  else if (!cfg.mechanism.jumps.empty())
    cases.emplace_back("jumps", cfg.mechanism);

  MonteCarloReport r;
  r.check = "reflected";
  r.M = spec.paths;
  r.config = echo(cfg.mechanism, cfg.sim, h);
  r.config["time"] = spec.time;
  r.config["dts"] = spec.dts;

  for (const auto& [name, mech] : cases) {
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < spec.dts.size(); ++d) {
      SimConfig sim = cfg.sim;
      sim.dt = spec.dts[d];
      sim.horizon = spec.time;
      const auto sim_mech = simulated_mechanism(mech, sim);
      require_gaussian(sim_mech, "reflected");
      const double eps = h.bandwidth.value_or(h.identity_bandwidth_scale * std::cbrt(sim.dt));
      std::vector<double> sc(spec.paths), bl(spec.paths), sup(spec.paths);
      parallel_for(spec.paths, jobs, [&](std::size_t i) {
        const LevyPath p = sample_path(mech, sim, i);
        const auto id = reflected_identity(p, p.cells(), eps);
        sc[i] = id.continuous_supremum;
        bl[i] = p.effective_beta() * id.local_time_at_zero;
        sup[i] = supremum_process(p)[static_cast<Eigen::Index>(p.cells())];
      });
      std::vector<double> diff(spec.paths), absdiff(spec.paths);
      for (std::size_t i = 0; i < spec.paths; ++i) {
        diff[i] = bl[i] - sc[i];
        absdiff[i] = std::abs(diff[i]);
      }
      const auto s = sample_moments(sc), dm = sample_moments(diff), am = sample_moments(absdiff);
      const double mad = am.mean / s.mean;
      r.add({{"case", name}, {"dt", sim.dt}, {"eps", eps}, {"stat", "relative mean |beta L - S^c|"}}, mad, 0.0,
            am.stderr_mean() / s.mean, 0.0, CellRule::report);
      if (d > 0)
        r.add({{"case", name}, {"dt", sim.dt}, {"stat", "relative mean |beta L - S^c| decreases"}}, mad, previous,
              am.stderr_mean() / s.mean, 0.0, CellRule::decreasing);
      previous = mad;
      if (d + 1 == spec.dts.size()) {
        r.add({{"case", name}, {"dt", sim.dt}, {"stat", "relative deviation of means"}}, std::abs(dm.mean) / s.mean,
              spec.bound, dm.stderr_mean() / s.mean, 0.0, CellRule::at_most);
        if (name == "jump-free") {
          const double target = drifted_supremum_mean(-(mech.alpha + h.oracle_alpha_shift), 2.0 * sim_mech.beta,
                                                      spec.time);
          const auto ms = sample_moments(sup);
          r.add({{"case", name}, {"dt", sim.dt}, {"stat", "mean S_t"}}, ms.mean, target, ms.stderr_mean(),
                3 * ms.stderr_mean() + h.mean_budget * target);
        }
      }
    }
  }
  return r;
}

MonteCarloReport brownian_example_check(const RunConfig& cfg, unsigned jobs) {
  const auto& h = cfg.harness;
  const auto& spec = h.example;
  const BranchingMechanism mech{0.0, 0.5, {}};
  SimConfig sim = cfg.sim;
  sim.dt = spec.dt;
  sim.horizon = spec.time;
  sim.truncation_delta.reset();

  MonteCarloReport r;
  r.check = "example";
  r.M = spec.paths;
  r.config = echo(mech, sim, h);
  r.config["time"] = spec.time;

  std::vector<double> H(spec.paths);
  parallel_for(spec.paths, jobs, [&](std::size_t i) {
    const LevyPath p = sample_path(mech, sim, i, StreamDomain::brownian_example);
    H[i] = explore(p).height.back();
  });
  // H_t = (xi_t - I_0(t)) / beta, distributed as S_t / beta for the oracle drift
  const double mu = -(mech.alpha + h.oracle_alpha_shift);
  const double sigma2 = 2.0 * mech.beta;
  const double t = spec.time;
  auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : 1.0 - drifted_supremum_tail(mech.beta * x, mu, sigma2, t); };
  const double ks = ks_distance(H, cdf);
  r.add({{"t", t}, {"stat", "KS distance"}}, ks, 0.0, 0.0, ks_critical(H.size(), spec.level), CellRule::at_most);
  const auto m = sample_moments(H);
  const double target = drifted_supremum_mean(mu, sigma2, t) / mech.beta;
  r.add({{"t", t}, {"stat", "mean H_t"}}, m.mean, target, m.stderr_mean(), 3 * m.stderr_mean() + h.mean_budget * target);
  r.add({{"t", t}, {"stat", "min H_t"}}, *std::min_element(H.begin(), H.end()), 0.0, 0.0, 0.0, CellRule::report);
  return r;
}

MonteCarloReport run_suite(Suite s, const RunConfig& cfg, unsigned jobs) {
  switch (s) {
    case Suite::ray_knight: return ray_knight_report(cfg, jobs);
    case Suite::theorem1: return theorem1_report(cfg, jobs);
    case Suite::tanaka: return tanaka_refinement_study(cfg, jobs);
    case Suite::noise: return white_noise_check(cfg, jobs);
    case Suite::poisson_marks: return poisson_marks_check(cfg, jobs);
    case Suite::reflected: return reflected_supremum_check(cfg, jobs);
    case Suite::example: return brownian_example_check(cfg, jobs);
  }
  throw std::logic_error("unknown suite");
}

}  // namespace rklab
