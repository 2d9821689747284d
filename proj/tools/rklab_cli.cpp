#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rklab/cb_flow.hpp"
#include "rklab/config.hpp"
#include "rklab/errors.hpp"
#include "rklab/exploration.hpp"
#include "rklab/levy_path.hpp"
#include "rklab/mechanism.hpp"
#include "rklab/parallel.hpp"
#include "rklab/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rklab;

namespace {

enum Exit { kOk = 0, kConfig = 2, kPrecondition = 3, kCheck = 4 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  unsigned jobs = 0;
};

RunConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_run_config(o.config);
  if (o.seed) c.sim.seed = *o.seed;
  if (o.paths) {
    if (*o.paths == 0) throw ConfigError("--paths must be positive");
    c.harness.paths = *o.paths;
  }
  if (o.dt) {
    c.sim.dt = *o.dt;
    c.sim.validate();
  }
  if (o.out) c.harness.output = *o.out;
  return c;
}

fs::path out_dir(const RunConfig& c) {
  fs::path d(c.harness.output);
  fs::create_directories(d);
  return d;
}

void write_json(const fs::path& file, const ordered_json& j) {
  std::ofstream os(file);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + file.string());
}

int mechanism_info(const Options& o) {
  const RunConfig c = load(o);
  const auto& m = c.mechanism;
  ordered_json j;
  j["mechanism"] = mechanism_to_json(m);
  j["grey"] = grey_holds(m);
  j["integrability"] = m.jumps.integrability();
  ordered_json psis = ordered_json::array();
  for (double lam : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) psis.push_back({{"lambda", lam}, {"psi", psi(m, lam)}});
  j["psi"] = psis;
  ordered_json vs = ordered_json::array();
  for (double t : {0.25, 0.5, 1.0, 2.0})
    for (double lam : c.harness.lambdas)
      vs.push_back({{"t", t}, {"lambda", lam}, {"v", v(m, t, lam)}, {"laplace", cb_laplace(m, c.harness.x, t, lam)}});
  j["v"] = vs;
  std::cout << j.dump(2) << '\n';
  if (o.out) write_json(out_dir(c) / "mechanism_info.json", j);
  return kOk;
}

int simulate(const std::string& kind, const Options& o) {
  const RunConfig c = load(o);
  const std::size_t n = o.paths.value_or(1);
  const fs::path dir = out_dir(c);
  if (kind == "height" && !(truncated_mechanism(c.mechanism, effective_truncation(c.mechanism, c.sim),
                                                c.sim.small_jump_mode == SmallJumpMode::gaussian_correction)
                                .beta > 0.0))
    throw UnsupportedConfiguration("simulate height: the height process needs a Gaussian part (beta > 0)");

  ordered_json files = ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string suffix = "_" + std::to_string(i) + ".csv";
    if (kind == "levy") {
      const LevyPath p = sample_path(c.mechanism, c.sim, i);
      std::ofstream values(dir / ("path" + suffix)), jumps(dir / ("jumps" + suffix));
      write_path_csv(values, p);
      write_jumps_csv(jumps, p);
      files.push_back("path" + suffix);
      files.push_back("jumps" + suffix);
    } else if (kind == "cb") {
      const CBTrajectory t = simulate_cb(c.mechanism, c.harness.x, c.sim, i);
      std::ofstream os(dir / ("cb" + suffix));
      write_cb_csv(os, t);
      files.push_back("cb" + suffix);
    } else {
      const LevyPath p = sample_path(c.mechanism, c.sim, i);
      const Eigen::VectorXd h = height_trajectory(p);
      std::ofstream os(dir / ("height" + suffix));
      os << "time,height\n";
      os.precision(17);
      for (Eigen::Index k = 0; k < h.size(); ++k) os << static_cast<double>(k) * p.dt << ',' << h[k] << '\n';
      files.push_back("height" + suffix);
    }
  }
  ordered_json side;
  side["kind"] = kind;
  side["mechanism"] = mechanism_to_json(c.mechanism);
  side["sim"] = sim_to_json(c.sim);
  side["seed"] = c.sim.seed;
  if (kind == "cb") side["x"] = c.harness.x;
  side["files"] = files;
  write_json(dir / ("simulate_" + kind + ".json"), side);
  std::cout << "wrote " << files.size() << " file(s) to " << dir.string() << '\n';
  return kOk;
}

int verify(const std::string& name, const Options& o) {
  const RunConfig c = load(o);
  const unsigned jobs = o.jobs ? o.jobs : default_jobs();
  const fs::path dir = out_dir(c);
  std::vector<Suite> suites;
  if (name == "all")
    suites = all_suites();
  else
    suites.push_back(parse_suite(name));

  ordered_json all = ordered_json::array();
  bool ok = true;
  for (Suite s : suites) {
    const MonteCarloReport r = run_suite(s, c, jobs);
    const ordered_json j = r.to_json();
    write_json(dir / ("report_" + suite_name(s) + ".json"), j);
    all.push_back(j);
    std::size_t failed = 0;
    for (const auto& cell : r.cells) failed += !cell.pass;
    std::cout << (r.pass() ? "PASS " : "FAIL ") << suite_name(s) << "  cells=" << r.cells.size()
              << " failed=" << failed << " discarded=" << r.discarded << '\n';
    for (const auto& f : r.flags) std::cout << "  invalid: " << f << '\n';
    ok = ok && r.pass();
  }
  if (name == "all") write_json(dir / "report_all.json", ordered_json{{"suites", all}});
  return ok ? kOk : kCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Height process, local times and Ray-Knight checks for CB-processes"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
    cmd->add_option("--out", o.out, "output directory (overrides harness.output)");
    cmd->add_option("--seed", o.seed, "master seed (overrides sim.seed)");
    cmd->add_option("--paths", o.paths, "number of paths (overrides harness.paths)");
    cmd->add_option("--dt", o.dt, "grid step (overrides sim.dt)");
    cmd->add_option("--jobs", o.jobs, "worker threads (default: available parallelism)");
  };

  auto* mech = app.add_subcommand("mechanism", "branching mechanism utilities");
  mech->require_subcommand(1);
  auto* info = mech->add_subcommand("info", "psi, Grey's condition and v_t(lambda)");
  common(info);

  std::string kind, suite;
  auto* sim = app.add_subcommand("simulate", "write simulated paths as CSV");
  sim->add_option("kind", kind, "levy | cb | height")->required()->check(CLI::IsMember({"levy", "cb", "height"}));
  common(sim);

  auto* ver = app.add_subcommand("verify", "run verification suites");
  std::vector<std::string> names{"all"};
  for (Suite s : all_suites()) names.push_back(suite_name(s));
  ver->add_option("suite", suite, "suite name or all")->required()->check(CLI::IsMember(names));
  common(ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (info->parsed()) return mechanism_info(o);
    if (sim->parsed()) return simulate(kind, o);
    if (ver->parsed()) return verify(suite, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const UnsupportedConfiguration& e) {
    std::cerr << "unsupported configuration: " << e.what() << '\n';
    return kPrecondition;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
