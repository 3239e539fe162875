// Experiment runner for the derivative NLS laboratory: soliton formula
// checks, single- and multi-soliton evolutions with modulation tracking,
// linearized-operator spectra, and reproducible sweeps.

#include <deque>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dnls/lab.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string output_dir;
  std::vector<std::string> sets;
  std::string omega, c, theta0, x0;
  double separation = -1.0;
  double length = -1.0;
  long long n = -1;
  double t_end = -1.0, dt = -1.0, output_dt = -1.0;
  std::string form, kind;
  double delta = -1.0;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "configuration file (key = value lines)");
  cmd->add_option("--out", f.output_dir, "output directory (OUTPUT_DIR env overrides)");
  cmd->add_option("--set", f.sets, "override any config key, e.g. --set evolver.dt=0.004");
  cmd->add_option("--omega", f.omega, "soliton frequencies, comma separated");
  cmd->add_option("--c", f.c, "soliton speeds, comma separated");
  cmd->add_option("--theta0", f.theta0, "initial phases");
  cmd->add_option("--x0", f.x0, "initial centers");
  cmd->add_option("--separation", f.separation, "minimal center separation L");
  cmd->add_option("--length", f.length, "box length");
  cmd->add_option("--n", f.n, "grid points (power of two)");
  cmd->add_option("--t-end", f.t_end, "final time");
  cmd->add_option("--dt", f.dt, "time step");
  cmd->add_option("--output-dt", f.output_dt, "output interval");
  cmd->add_option("--form", f.form, "equation form: chen_liu_lee|kaup_newell|boosted");
  cmd->add_option("--kind", f.kind, "perturbation kind: none|gaussian_bump|random_smooth");
  cmd->add_option("--delta", f.delta, "perturbation H1 size");
  cmd->add_option("--seed", f.seed, "random seed");
}

std::map<std::string, std::string> overrides_from(const CommonFlags& f,
                                                  const std::string& scenario) {
  std::map<std::string, std::string> kv;
  if (!scenario.empty()) kv["scenario"] = scenario;
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  auto put = [&kv](const std::string& key, const std::string& value) {
    if (!value.empty()) kv[key] = value;
  };
  put("multi.omega", f.omega);
  put("multi.c", f.c);
  put("multi.theta0", f.theta0);
  put("multi.x0", f.x0);
  if (f.separation >= 0) kv["multi.separation"] = std::to_string(f.separation);
  if (f.length > 0) kv["grid.length"] = std::to_string(f.length);
  if (f.n > 0) kv["grid.n"] = std::to_string(f.n);
  if (f.t_end >= 0) kv["evolver.t_end"] = std::to_string(f.t_end);
  if (f.dt > 0) kv["evolver.dt"] = std::to_string(f.dt);
  if (f.output_dt > 0) kv["evolver.output_dt"] = std::to_string(f.output_dt);
  put("evolver.form", f.form);
  put("perturbation.kind", f.kind);
  if (f.delta >= 0) kv["perturbation.h1_size"] = std::to_string(f.delta);
  if (f.seed >= 0) kv["seed"] = std::to_string(f.seed);
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dnls-lab: numerical experiments for the derivative NLS equation"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    CommonFlags flags;
    std::string scenario;  // empty for profile/fit
  };
  std::deque<Sub> subs;  // stable addresses: CLI11 keeps references to the flags
  auto add = [&](const char* name, const char* help, const char* scenario) -> Sub& {
    subs.push_back(Sub{app.add_subcommand(name, help), {}, scenario});
    add_common(subs.back().cmd, subs.back().flags);
    return subs.back();
  };

  add("check-formulas", "verify the closed-form soliton identities on the grid",
      "check_formulas");
  add("profile", "sample the configured initial datum and report invariants", "");
  add("evolve", "integrate a single perturbed soliton and track it", "evolve_single");
  add("fit", "fit modulation parameters to the configured initial datum", "");
  add("spectrum", "discretize the linearized operator and report its low spectrum",
      "spectrum");
  add("stability", "multi-soliton stability experiment", "stability");
  add("monotonicity", "localized mass/momentum monotonicity experiment", "monotonicity");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run several configs on a worker pool");
  std::vector<std::string> sweep_configs;
  int sweep_jobs = 2;
  std::string sweep_out;
  sweep_cmd->add_option("configs", sweep_configs, "config files")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "worker count");
  sweep_cmd->add_option("--out", sweep_out, "base output directory");

  CLI11_PARSE(app, argc, argv);

  if (sweep_cmd->parsed()) return dnls::lab::sweep(sweep_configs, sweep_jobs, sweep_out);

  for (const Sub& sub : subs) {
    if (!sub.cmd->parsed()) continue;
    std::map<std::string, std::string> overrides;
    try {
      overrides = overrides_from(sub.flags, sub.scenario);
    } catch (const CLI::ValidationError& e) {
      std::fprintf(stderr, "%s\n", e.what());
      return 2;
    }
    const std::string name = sub.cmd->get_name();
    if (name == "profile" || name == "fit") {
      dnls::lab::ExperimentConfig cfg;
      try {
        cfg = dnls::lab::load_config(sub.flags.config_path, overrides);
      } catch (const dnls::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
      }
      const std::string out = dnls::lab::resolve_output_dir(cfg, sub.flags.output_dir);
      try {
        return name == "profile" ? dnls::lab::run_profile(cfg, out)
                                 : dnls::lab::run_fit(cfg, out);
      } catch (const dnls::Error& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 1;
      }
    }
    return dnls::lab::run(sub.flags.config_path, overrides, sub.flags.output_dir);
  }
  return 2;
}
