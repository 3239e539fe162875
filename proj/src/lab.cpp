#include "dnls/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dnls::lab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Consumes keys from a working copy so leftovers can be reported as unknown.
class KeyReader {
public:
  explicit KeyReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  double number(const std::string& key, double fallback) {
    auto v = take(key);
    return v ? to_double(key, *v) : fallback;
  }
  std::optional<double> number_opt(const std::string& key) {
    auto v = take(key);
    if (!v) return std::nullopt;
    return to_double(key, *v);
  }
  long long integer(const std::string& key, long long fallback) {
    auto v = take(key);
    return v ? to_int(key, *v) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) {
    auto v = take(key);
    return v ? to_bool(key, *v) : fallback;
  }
  std::optional<std::vector<double>> list(const std::string& key) {
    auto v = take(key);
    if (!v) return std::nullopt;
    return to_list(key, *v);
  }

  void finish() const {
    if (kv_.empty()) return;
    std::string names;
    for (const auto& [k, _] : kv_) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown configuration keys: " + names);
  }

private:
  std::map<std::string, std::string> kv_;
};

Scenario parse_scenario(const std::string& name) {
  if (name == "check_formulas") return Scenario::check_formulas;
  if (name == "evolve_single") return Scenario::evolve_single;
  if (name == "stability") return Scenario::stability;
  if (name == "monotonicity") return Scenario::monotonicity;
  if (name == "spectrum") return Scenario::spectrum;
  throw ConfigError("unknown scenario '" + name + "'");
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::check_formulas: return "check_formulas";
    case Scenario::evolve_single: return "evolve_single";
    case Scenario::stability: return "stability";
    case Scenario::monotonicity: return "monotonicity";
    case Scenario::spectrum: return "spectrum";
  }
  return "?";
}

bool is_evolution_scenario(Scenario s) {
  return s == Scenario::evolve_single || s == Scenario::stability ||
         s == Scenario::monotonicity;
}

bool check_close(double value, double reference, double tol) {
  return std::abs(value - reference) <= tol * std::max(1.0, std::abs(reference));
}

CheckEntry entry(const std::string& name, double value, double reference, double tol) {
  CheckEntry e{name, value, reference, tol, false};
  e.pass = check_close(value, reference, tol);
  return e;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

ExperimentConfig build_config(const std::map<std::string, std::string>& kv) {
  KeyReader reader(kv);
  ExperimentConfig cfg;

  if (auto bad = reader.take("alpha"))
    throw ConfigError("'alpha' is derived as omega_star/32 and cannot be set");

  if (auto s = reader.take("scenario")) cfg.scenario = parse_scenario(*s);
  cfg.seed = static_cast<std::uint64_t>(reader.integer("seed", 0));

  const bool spectrum_defaults = cfg.scenario == Scenario::spectrum;
  const double length = reader.number("grid.length", spectrum_defaults ? 60.0 : 80.0);
  const long long n = reader.integer("grid.n", spectrum_defaults ? 1024 : 4096);
  try {
    cfg.grid = make_grid(length, static_cast<int>(n));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }

  auto omega = reader.list("multi.omega");
  auto c = reader.list("multi.c");
  if (!omega || !c) throw ConfigError("multi.omega and multi.c are required");
  const std::size_t n_waves = omega->size();
  auto theta0 = reader.list("multi.theta0").value_or(std::vector<double>(n_waves, 0.0));
  std::vector<double> x0_default(n_waves, 0.0);
  auto x0 = reader.list("multi.x0");
  if (!x0) {
    if (n_waves > 1) throw ConfigError("multi.x0 is required for more than one soliton");
    x0 = x0_default;
  }
  double separation = reader.number("multi.separation", n_waves > 1 ? -1.0 : 1.0);
  if (n_waves > 1 && separation <= 0)
    throw ConfigError("multi.separation is required for more than one soliton");
  try {
    cfg.multi = validate_multi_soliton(*omega, *c, theta0, *x0, separation);
  } catch (const MultiSolitonError& e) {
    throw ConfigError(std::string("multi-soliton configuration rejected: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("multi-soliton configuration rejected: ") + e.what());
  }

  if (auto kind = reader.take("perturbation.kind")) {
    if (*kind == "none")
      cfg.perturbation.kind = PerturbationSpec::Kind::none;
    else if (*kind == "gaussian_bump")
      cfg.perturbation.kind = PerturbationSpec::Kind::gaussian_bump;
    else if (*kind == "random_smooth")
      cfg.perturbation.kind = PerturbationSpec::Kind::random_smooth;
    else
      throw ConfigError("unknown perturbation.kind '" + *kind + "'");
  }
  cfg.perturbation.h1_size = reader.number("perturbation.h1_size", 0.0);
  if (cfg.perturbation.h1_size < 0.0)
    throw ConfigError("perturbation.h1_size must be nonnegative");

  if (auto form = reader.take("evolver.form")) {
    if (*form == "chen_liu_lee")
      cfg.evolver.form = EquationForm::chen_liu_lee;
    else if (*form == "kaup_newell")
      cfg.evolver.form = EquationForm::kaup_newell;
    else if (*form == "boosted")
      cfg.evolver.form = EquationForm::boosted;
    else
      throw ConfigError("unknown evolver.form '" + *form + "'");
  }
  cfg.evolver.sigma = reader.number("evolver.sigma", 0.0);
  cfg.evolver.cfl_safety = reader.number("evolver.cfl_safety", 0.1);
  cfg.evolver.output_dt = reader.number("evolver.output_dt", 0.5);
  cfg.evolver.t_end = reader.number("evolver.t_end", 0.0);
  if (auto dealias = reader.take("evolver.dealias")) {
    if (*dealias == "pad2x")
      cfg.evolver.dealias = DealiasRule::pad2x;
    else if (*dealias == "none")
      cfg.evolver.dealias = DealiasRule::none;
    else
      throw ConfigError("unknown evolver.dealias '" + *dealias + "'");
  }
  if (auto dt = reader.number_opt("evolver.dt")) {
    cfg.evolver.dt = *dt;
  } else {
    // largest step on the output lattice satisfying the CFL-style bound
    const double cap = cfg.evolver.cfl_safety * cfg.grid.dx();
    cfg.evolver.dt = cfg.evolver.output_dt / std::ceil(cfg.evolver.output_dt / cap);
  }

  cfg.stability_a0 = reader.number("stability.a0", 10.0);
  cfg.mono_c0 = reader.number("monotonicity.c_mono", 10.0);
  cfg.zero_tol = reader.number("spectrum.zero_tol", 1e-6);
  cfg.conservation_tol = reader.number("evolve.conservation_tol", 1e-8);
  cfg.write_snapshots = reader.boolean("output.snapshots", false);
  if (auto dir = reader.take("output.dir")) cfg.output_dir = *dir;

  reader.finish();

  if (is_evolution_scenario(cfg.scenario)) {
    if (!(cfg.evolver.t_end > 0.0))
      throw ConfigError("evolver.t_end is required for evolution scenarios");
    if (cfg.scenario == Scenario::evolve_single && cfg.multi.count() != 1)
      throw ConfigError("evolve_single requires exactly one soliton");
    try {
      cfg.evolver.validate(cfg.grid);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("evolver: ") + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    kv = parse_key_values(in);
  }
  for (const auto& [k, v] : overrides) kv[k] = v;
  return build_config(kv);
}

Field make_perturbation(const ExperimentConfig& cfg) {
  const GridSpec& g = cfg.grid;
  if (cfg.perturbation.kind == PerturbationSpec::Kind::none || cfg.perturbation.h1_size == 0.0)
    return Field::zero(g);

  Field v = Field::zero(g);
  if (cfg.perturbation.kind == PerturbationSpec::Kind::gaussian_bump) {
    const auto& waves = cfg.multi.solitons;
    const double x_p =
        waves.size() > 1 ? 0.5 * (waves[0].x0 + waves[1].x0) : waves[0].x0;
    const Eigen::ArrayXd x = g.nodes();
    for (int m = 0; m < g.n; ++m) {
      const double d = x[m] - x_p;
      v.values[m] = std::exp(-d * d);
    }
  } else {
    v = random_band_limited(g, 2, cfg.seed);
  }
  const double h1 = std::sqrt(h1_norm_sq(v));
  v.values *= cfg.perturbation.h1_size / h1;
  return v;
}

Field initial_datum(const ExperimentConfig& cfg) {
  Field u = Field::zero(cfg.grid);
  for (const auto& p : cfg.multi.solitons) u.values += soliton_profile(p, cfg.grid).values;
  u.values += make_perturbation(cfg).values;
  return u;
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& rows,
                           int n_waves) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");

  out << "# t,E,M,P";
  for (int j = 1; j <= n_waves; ++j) out << ",Q_" << j;
  out << ",eps_l2,eps_h1,I";
  for (int j = 2; j <= n_waves; ++j) out << ",I_" << j;
  out << ",H";
  for (int j = 1; j <= n_waves; ++j) out << ",theta_" << j;
  for (int j = 1; j <= n_waves; ++j) out << ",x_" << j;
  for (int j = 1; j <= n_waves; ++j) out << ",omega_" << j;
  for (int j = 1; j <= n_waves; ++j) out << ",c_" << j;
  out << ",fit_residual\n";

  for (const auto& r : rows) {
    std::vector<double> cols{r.t, r.e, r.m, r.p};
    cols.insert(cols.end(), r.q.begin(), r.q.end());
    cols.push_back(r.eps_l2);
    cols.push_back(r.eps_h1);
    cols.push_back(r.i_value);
    cols.insert(cols.end(), r.i_j.begin(), r.i_j.end());
    cols.push_back(r.h_value);
    cols.insert(cols.end(), r.theta.begin(), r.theta.end());
    cols.insert(cols.end(), r.x.begin(), r.x.end());
    cols.insert(cols.end(), r.omega.begin(), r.omega.end());
    cols.insert(cols.end(), r.c.begin(), r.c.end());
    cols.push_back(r.fit_residual);
    for (std::size_t i = 0; i < cols.size(); ++i)
      out << (i ? "," : "") << format_double(cols[i]);
    out << "\n";
  }
}

namespace {

struct AbortRun {};

}  // namespace

TrackedRun tracked_evolution(const ExperimentConfig& cfg, const std::string& snapshot_dir) {
  TrackedRun out;
  const int n_waves = cfg.multi.count();
  out.max_omega_drift.assign(n_waves, 0.0);
  out.max_ij_drift.assign(std::max(0, n_waves - 1), 0.0);

  const Field u0 = initial_datum(cfg);
  ModulationTracker tracker(ModulationState::from_config(cfg.multi));

  CutoffSpec cut;
  bool have_base = false;
  double i0 = 0.0;
  std::vector<double> ij0(std::max(0, n_waves - 1), 0.0);
  std::vector<double> q0(n_waves, 0.0);
  double e0 = 0.0, m0 = 0.0, p0 = 0.0;
  int snapshot_index = 0;

  auto observer = [&](double t, const Field& u) {
    tracker.observe(t, u);
    if (tracker.failed()) throw AbortRun{};
    const ModulationState& s = tracker.states().back();

    if (!have_base) {
      out.omega_t0 = s.omega;
      for (int j = 0; j < n_waves; ++j) out.c_t0.push_back(s.speed(j));
      cut = make_cutoff_spec(out.omega_t0, out.c_t0, s.x, cfg.multi.separation);
    }

    DiagnosticsRecord rec;
    rec.t = t;
    rec.e = energy(u);
    rec.m = mass(u);
    rec.p = momentum(u);

    std::vector<Field> profiles;
    profiles.reserve(n_waves);
    for (int j = 0; j < n_waves; ++j)
      profiles.push_back(soliton_profile(s.wave_params(j), cfg.grid));
    Field eps(cfg.grid, u.values);
    for (const auto& r : profiles) eps.values -= r.values;
    rec.eps_l2 = std::sqrt(l2_norm_sq(eps));
    rec.eps_h1 = std::sqrt(h1_norm_sq(eps));

    for (int j = 0; j < n_waves; ++j) rec.q.push_back(q_charge(profiles[j], s.mu[j]));

    const WeightSet w = build_weights(cut, t, cfg.grid);
    rec.i_value = localized_mass_momentum(u, w, out.omega_t0, out.c_t0);
    for (int j = 2; j <= n_waves; ++j)
      rec.i_j.push_back(halfline_mass_momentum(u, cut, j, t));

    std::vector<double> c_now;
    for (int j = 0; j < n_waves; ++j) c_now.push_back(s.speed(j));
    rec.h_value = action_hessian_form(eps, profiles, s.omega, c_now, w);
    rec.theta = s.theta;
    rec.x = s.x;
    rec.omega = s.omega;
    rec.c = c_now;
    rec.fit_residual = s.residual_norm;

    // decomposition identity: I = omega_1 M + c_1 P + sum (c_j - c_{j-1}) I_j
    double decomp = out.omega_t0[0] * rec.m + out.c_t0[0] * rec.p;
    for (int j = 2; j <= n_waves; ++j)
      decomp += (out.c_t0[j - 1] - out.c_t0[j - 2]) * rec.i_j[j - 2];
    out.max_decomp_residual =
        std::max(out.max_decomp_residual, std::abs(rec.i_value - decomp));

    if (!have_base) {
      have_base = true;
      out.eps0_h1 = rec.eps_h1;
      i0 = rec.i_value;
      ij0 = rec.i_j;
      q0 = rec.q;
      e0 = rec.e;
      m0 = rec.m;
      p0 = rec.p;
    }
    out.sup_eps_h1 = std::max(out.sup_eps_h1, rec.eps_h1);
    out.sup_eps_l2 = std::max(out.sup_eps_l2, rec.eps_l2);
    for (int j = 0; j < n_waves; ++j) {
      out.max_omega_drift[j] =
          std::max(out.max_omega_drift[j], std::abs(rec.omega[j] - out.omega_t0[j]));
      out.max_q_drift = std::max(out.max_q_drift, std::abs(rec.q[j] - q0[j]));
    }
    out.max_i_drift = std::max(out.max_i_drift, rec.i_value - i0);
    for (std::size_t j = 0; j < rec.i_j.size(); ++j)
      out.max_ij_drift[j] = std::max(out.max_ij_drift[j], rec.i_j[j] - ij0[j]);
    out.e_drift = std::max(out.e_drift, std::abs(rec.e - e0));
    out.m_drift = std::max(out.m_drift, std::abs(rec.m - m0));
    out.p_drift = std::max(out.p_drift, std::abs(rec.p - p0));

    out.records.push_back(std::move(rec));
    if (!snapshot_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.snap", snapshot_index++);
      write_snapshot(snapshot_dir + "/" + name, t, u);
    }
  };

  try {
    const Trajectory traj = evolve(u0, cfg.evolver, {observer});
    out.boundary_leak = traj.boundary_leak;
  } catch (const AbortRun&) {
    out.fit_failed_at = tracker.result().failed_at;
  } catch (const EvolveError& e) {
    out.runtime_failure = e.what();
  }
  out.laws = tracker.result().laws;
  return out;
}

CheckFormulasReport run_check_formulas(const ExperimentConfig& cfg) {
  CheckFormulasReport rep;
  for (const auto& p : cfg.multi.solitons) {
    const std::string tag =
        "(omega=" + format_double(p.omega) + ",c=" + format_double(p.c) + ") ";
    const ClosedFormInvariants cf = closed_form_invariants(p.omega, p.c);
    const SolitonParams centered(p.omega, p.c, 0.0, 0.0);
    const Field phi = soliton_profile(centered, cfg.grid);
    const Field phi_x = derivative(phi);

    rep.checks.push_back(entry(tag + "L2^2", l2_norm_sq(phi), cf.l2sq, 1e-7));
    rep.checks.push_back(entry(tag + "L4^4", std::pow(lp_norm(phi, 4.0), 4.0), cf.l4, 1e-7));
    rep.checks.push_back(entry(tag + "L6^6", std::pow(lp_norm(phi, 6.0), 6.0), cf.l6, 1e-7));
    rep.checks.push_back(entry(tag + "grad_L2^2", l2_norm_sq(phi_x), cf.grad_l2sq, 1e-7));
    rep.checks.push_back(entry(tag + "mass", mass(phi), cf.mass, 1e-7));
    rep.checks.push_back(entry(tag + "momentum", momentum(phi), cf.momentum, 1e-7));
    rep.checks.push_back(entry(tag + "energy", energy(phi), cf.energy, 1e-7));

    const ProfileDerivatives d = profile_parameter_derivatives(centered, cfg.grid);
    const std::complex<double> i1(0.0, 1.0);
    Field i_phi_x(cfg.grid, (i1 * phi_x.values.array()).matrix());
    const double dm_dw = inner_l2(phi, d.d_omega);
    const double dm_dc = inner_l2(phi, d.d_c);
    const double dp_dw = inner_l2(i_phi_x, d.d_omega);
    const double dp_dc = inner_l2(i_phi_x, d.d_c);
    rep.checks.push_back(entry(tag + "dM/domega", dm_dw, cf.dmass_domega, 1e-4));
    rep.checks.push_back(entry(tag + "dM/dc", dm_dc, cf.dmass_dc, 1e-4));
    rep.checks.push_back(entry(tag + "dP/domega", dp_dw, cf.dmom_domega, 1e-4));
    rep.checks.push_back(entry(tag + "dP/dc", dp_dc, cf.dmom_dc, 1e-4));
    rep.checks.push_back(entry(tag + "dM/dc=dP/domega", dm_dc, dp_dw, 1e-4));

    rep.checks.push_back(entry(tag + "profile_residual", profile_residual(centered, cfg.grid),
                               0.0, 1e-8));
    const NehariValue nv = nehari(phi, p.omega, p.c);
    rep.checks.push_back(entry(tag + "nehari", nv.direct, 0.0, 1e-7));
    rep.checks.push_back(entry(tag + "nehari_identity", nv.direct, nv.sum_of_squares, 1e-7));
  }
  for (const auto& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

StabilityReport run_stability_experiment(const ExperimentConfig& cfg) {
  StabilityReport rep;
  rep.run = tracked_evolution(cfg);
  rep.delta = cfg.perturbation.h1_size;
  rep.tail_scale = std::exp(-cfg.alpha() * cfg.multi.separation);
  const double denom = rep.delta + rep.tail_scale;
  rep.ratio = denom > 0 ? rep.run.sup_eps_h1 / denom : 0.0;
  rep.ratio_pass = rep.ratio <= cfg.stability_a0;
  rep.fit_ok = !rep.run.fit_failed_at && !rep.run.runtime_failure;
  return rep;
}

MonotonicityReport run_monotonicity_experiment(const ExperimentConfig& cfg) {
  MonotonicityReport rep;
  rep.run = tracked_evolution(cfg);
  const double l = cfg.multi.separation;
  rep.tol_mono =
      cfg.mono_c0 * (rep.run.sup_eps_l2 * rep.run.sup_eps_l2 / l +
                     std::exp(-cfg.multi.omega_star * l / 16.0));
  rep.drift_pass = rep.run.max_i_drift <= rep.tol_mono;
  for (double d : rep.run.max_ij_drift) rep.drift_pass = rep.drift_pass && d <= rep.tol_mono;
  rep.decomposition_pass = rep.run.max_decomp_residual <= 1e-9;
  return rep;
}

SpectrumReport run_spectrum(const ExperimentConfig& cfg) {
  SpectrumReport rep;
  for (const auto& p : cfg.multi.solitons) {
    SpectrumWaveReport w;
    w.params = p;
    const RealPairOperator op = second_variation(p, cfg.grid);
    w.asymmetry = op.asymmetry;
    w.spectrum = spectrum_counts(op, cfg.zero_tol);

    // kernel identities and the frequency-direction form are grid-free
    // statements; evaluate them on a refined grid (narrow-strip profiles
    // with c > 0 need dx ~ 0.02 to reach the 1e-8 scale)
    int n_fine = cfg.grid.n;
    while (cfg.grid.length / n_fine > 0.02 && n_fine < (1 << 16)) n_fine *= 2;
    const GridSpec fine = make_grid(cfg.grid.length, n_fine, cfg.grid.x0_offset);
    const Eigen::ArrayXd x = fine.nodes();
    Eigen::VectorXcd k(fine.n);
    for (int m = 0; m < fine.n; ++m)
      k[m] = {profile_modulus_dx(p.omega, p.c, x[m] - p.x0),
              profile_modulus(p.omega, p.c, x[m] - p.x0)};
    const Field pair_out = apply_lplus_lminus(p, Field(fine, std::move(k)));
    double re_sq = 0.0, im_sq = 0.0;
    for (int m = 0; m < fine.n; ++m) {
      re_sq += pair_out.values[m].real() * pair_out.values[m].real();
      im_sq += pair_out.values[m].imag() * pair_out.values[m].imag();
    }
    w.lplus_residual = std::sqrt(fine.dx() * re_sq);
    w.lminus_residual = std::sqrt(fine.dx() * im_sq);

    w.recall_closed = negative_direction_value(p.omega, p.c, p.mu());
    w.recall_numeric = negative_direction_quadratic(p, fine);
    w.kappa_constrained = coercivity_probe(p, cfg.grid, 200, cfg.seed, true).min_ratio;
    w.min_ratio_unconstrained = coercivity_probe(p, cfg.grid, 200, cfg.seed, false).min_ratio;

    const bool ok = w.spectrum.n_negative == 1 && w.spectrum.n_zero == 2 &&
                    w.lplus_residual < 1e-8 && w.lminus_residual < 1e-8 &&
                    std::abs(w.recall_closed - w.recall_numeric) <=
                        1e-3 * std::max(1.0, std::abs(w.recall_closed)) &&
                    w.kappa_constrained > 0.0 && w.min_ratio_unconstrained < 0.0;
    rep.pass = rep.pass && ok;
    rep.waves.push_back(std::move(w));
  }
  return rep;
}

namespace {

json laws_to_json(const DynamicalLawReport& laws) {
  return json{{"valid", laws.valid},
              {"max_theta_rate_error", laws.max_theta_rate_error},
              {"max_x_rate_error", laws.max_x_rate_error},
              {"max_omega_rate", laws.max_omega_rate}};
}

json run_to_json(const TrackedRun& run) {
  json j{{"records", run.records.size()},
         {"eps0_h1", run.eps0_h1},
         {"sup_eps_h1", run.sup_eps_h1},
         {"sup_eps_l2", run.sup_eps_l2},
         {"max_omega_drift", run.max_omega_drift},
         {"max_i_drift", run.max_i_drift},
         {"max_ij_drift", run.max_ij_drift},
         {"max_decomp_residual", run.max_decomp_residual},
         {"max_q_drift", run.max_q_drift},
         {"e_drift", run.e_drift},
         {"m_drift", run.m_drift},
         {"p_drift", run.p_drift},
         {"boundary_leak", run.boundary_leak},
         {"laws", laws_to_json(run.laws)}};
  if (run.fit_failed_at)
    j["fit_failed_at"] = *run.fit_failed_at;
  else
    j["fit_failed_at"] = nullptr;
  if (run.runtime_failure)
    j["runtime_failure"] = *run.runtime_failure;
  else
    j["runtime_failure"] = nullptr;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

void write_timeseries(const std::string& path, const std::vector<DiagnosticsRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "t\teps_l2\teps_h1\tI\tH\n";
  for (const auto& r : rows)
    out << format_double(r.t) << "\t" << format_double(r.eps_l2) << "\t"
        << format_double(r.eps_h1) << "\t" << format_double(r.i_value) << "\t"
        << format_double(r.h_value) << "\n";
}

json config_echo(const ExperimentConfig& cfg) {
  std::vector<double> omega, c, theta0, x0;
  for (const auto& p : cfg.multi.solitons) {
    omega.push_back(p.omega);
    c.push_back(p.c);
    theta0.push_back(p.theta0);
    x0.push_back(p.x0);
  }
  return json{{"scenario", scenario_name(cfg.scenario)},
              {"seed", cfg.seed},
              {"grid", {{"length", cfg.grid.length}, {"n", cfg.grid.n}}},
              {"multi",
               {{"omega", omega},
                {"c", c},
                {"theta0", theta0},
                {"x0", x0},
                {"separation", cfg.multi.separation},
                {"omega_star", cfg.multi.omega_star},
                {"sigma", cfg.multi.sigma}}},
              {"alpha", cfg.alpha()},
              {"evolver",
               {{"dt", cfg.evolver.dt},
                {"t_end", cfg.evolver.t_end},
                {"output_dt", cfg.evolver.output_dt}}},
              {"perturbation", {{"h1_size", cfg.perturbation.h1_size}}}};
}

}  // namespace

int run_scenario(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/plotdata");
  std::string snapshot_dir;
  if (cfg.write_snapshots && is_evolution_scenario(cfg.scenario)) {
    snapshot_dir = out_dir + "/snapshots";
    fs::create_directories(snapshot_dir);
  }

  json summary;
  summary["config"] = config_echo(cfg);
  int exit_code = 0;

  switch (cfg.scenario) {
    case Scenario::check_formulas: {
      const CheckFormulasReport rep = run_check_formulas(cfg);
      json checks = json::object();
      for (const auto& c : rep.checks)
        checks[c.name] = {{"value", c.value},
                          {"reference", c.reference},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}};
      summary["checks"] = checks;
      summary["pass"] = rep.all_pass;
      write_diagnostics_csv(out_dir + "/diagnostics.csv", {}, cfg.multi.count());
      break;
    }
    case Scenario::spectrum: {
      const SpectrumReport rep = run_spectrum(cfg);
      json waves = json::array();
      std::ofstream eig(out_dir + "/plotdata/eigenvalues.tsv");
      eig << "wave\teigenvalue\n";
      for (std::size_t j = 0; j < rep.waves.size(); ++j) {
        const auto& w = rep.waves[j];
        waves.push_back({{"omega", w.params.omega},
                         {"c", w.params.c},
                         {"n_negative", w.spectrum.n_negative},
                         {"n_zero", w.spectrum.n_zero},
                         {"lowest", w.spectrum.lowest},
                         {"asymmetry", w.asymmetry},
                         {"lplus_residual", w.lplus_residual},
                         {"lminus_residual", w.lminus_residual},
                         {"recall_closed", w.recall_closed},
                         {"recall_numeric", w.recall_numeric},
                         {"kappa_constrained", w.kappa_constrained},
                         {"min_ratio_unconstrained", w.min_ratio_unconstrained}});
        for (double ev : w.spectrum.lowest)
          eig << j + 1 << "\t" << format_double(ev) << "\n";
      }
      summary["waves"] = waves;
      summary["pass"] = rep.pass;
      write_diagnostics_csv(out_dir + "/diagnostics.csv", {}, cfg.multi.count());
      break;
    }
    case Scenario::evolve_single: {
      const TrackedRun run = tracked_evolution(cfg, snapshot_dir);
      summary["run"] = run_to_json(run);
      // conservation verdicts; the exact-solution error when unperturbed
      const bool conserved = run.e_drift < cfg.conservation_tol &&
                             run.m_drift < cfg.conservation_tol &&
                             run.p_drift < cfg.conservation_tol;
      summary["conservation_pass"] = conserved;
      summary["pass"] = conserved && !run.fit_failed_at && !run.runtime_failure;
      write_diagnostics_csv(out_dir + "/diagnostics.csv", run.records, cfg.multi.count());
      write_timeseries(out_dir + "/plotdata/timeseries.tsv", run.records);
      if (run.fit_failed_at || run.runtime_failure) exit_code = 1;
      break;
    }
    case Scenario::stability: {
      const StabilityReport rep = run_stability_experiment(cfg);
      summary["run"] = run_to_json(rep.run);
      summary["delta"] = rep.delta;
      summary["tail_scale"] = rep.tail_scale;
      summary["ratio"] = rep.ratio;
      summary["a0"] = cfg.stability_a0;
      summary["ratio_pass"] = rep.ratio_pass;
      summary["fit_ok"] = rep.fit_ok;
      summary["pass"] = rep.ratio_pass && rep.fit_ok;
      write_diagnostics_csv(out_dir + "/diagnostics.csv", rep.run.records, cfg.multi.count());
      write_timeseries(out_dir + "/plotdata/timeseries.tsv", rep.run.records);
      if (!rep.fit_ok) exit_code = 1;
      break;
    }
    case Scenario::monotonicity: {
      const MonotonicityReport rep = run_monotonicity_experiment(cfg);
      summary["run"] = run_to_json(rep.run);
      summary["tol_mono"] = rep.tol_mono;
      summary["drift_pass"] = rep.drift_pass;
      summary["decomposition_pass"] = rep.decomposition_pass;
      summary["pass"] = rep.drift_pass && rep.decomposition_pass &&
                        !rep.run.fit_failed_at && !rep.run.runtime_failure;
      write_diagnostics_csv(out_dir + "/diagnostics.csv", rep.run.records, cfg.multi.count());
      write_timeseries(out_dir + "/plotdata/timeseries.tsv", rep.run.records);
      if (rep.run.fit_failed_at || rep.run.runtime_failure) exit_code = 1;
      break;
    }
  }

  write_json(out_dir + "/summary.json", summary);
  return exit_code;
}

int run_profile(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/plotdata");

  const Field u = initial_datum(cfg);
  std::ofstream tsv(out_dir + "/plotdata/profile.tsv");
  tsv << "x\tre\tim\tabs\n";
  const Eigen::ArrayXd x = cfg.grid.nodes();
  for (int m = 0; m < cfg.grid.n; ++m)
    tsv << format_double(x[m]) << "\t" << format_double(u.values[m].real()) << "\t"
        << format_double(u.values[m].imag()) << "\t" << format_double(std::abs(u.values[m]))
        << "\n";

  json summary;
  summary["config"] = config_echo(cfg);
  json waves = json::array();
  for (const auto& p : cfg.multi.solitons) {
    const ClosedFormInvariants cf = closed_form_invariants(p.omega, p.c);
    waves.push_back({{"omega", p.omega},
                     {"c", p.c},
                     {"mu", p.mu()},
                     {"mass", cf.mass},
                     {"momentum", cf.momentum},
                     {"energy", cf.energy},
                     {"l2sq", cf.l2sq},
                     {"residual", profile_residual(p, cfg.grid)}});
  }
  summary["waves"] = waves;
  write_json(out_dir + "/summary.json", summary);
  return 0;
}

int run_fit(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Field u = initial_datum(cfg);
  const ModulationState fitted = fit(u, ModulationState::from_config(cfg.multi));

  Field eps(cfg.grid, u.values);
  eps.values -= modulated_sum(fitted, cfg.grid).values;

  json summary;
  summary["config"] = config_echo(cfg);
  std::vector<double> c_fit;
  for (int j = 0; j < fitted.count(); ++j) c_fit.push_back(fitted.speed(j));
  summary["fit"] = {{"converged", fitted.converged},
                    {"residual_norm", fitted.residual_norm},
                    {"theta", fitted.theta},
                    {"x", fitted.x},
                    {"omega", fitted.omega},
                    {"c", c_fit},
                    {"eps_h1", std::sqrt(h1_norm_sq(eps))}};
  summary["pass"] = fitted.converged;
  write_json(out_dir + "/summary.json", summary);
  return fitted.converged ? 0 : 1;
}

std::string resolve_output_dir(const ExperimentConfig& cfg, const std::string& cli_output_dir) {
  if (const char* env = std::getenv("OUTPUT_DIR"); env && *env) return env;
  if (!cli_output_dir.empty()) return cli_output_dir;
  return cfg.output_dir;
}

int run_at(const std::string& config_path, const std::map<std::string, std::string>& overrides,
           const std::string& exact_output_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  const std::string out_dir =
      exact_output_dir.empty() ? resolve_output_dir(cfg, "") : exact_output_dir;
  try {
    return run_scenario(cfg, out_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 1;
  }
}

int run(const std::string& config_path, const std::map<std::string, std::string>& overrides,
        const std::string& cli_output_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  const std::string out_dir = resolve_output_dir(cfg, cli_output_dir);
  try {
    return run_scenario(cfg, out_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 1;
  }
}

int sweep(const std::vector<std::string>& config_paths, int jobs,
          const std::string& cli_output_dir) {
  if (config_paths.empty()) return 0;
  jobs = std::max(1, jobs);
  std::string base = cli_output_dir.empty() ? std::string("dnls-sweep") : cli_output_dir;
  if (const char* env = std::getenv("OUTPUT_DIR"); env && *env) base = env;

  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config_paths.size()) return;
      const fs::path p(config_paths[i]);
      const std::string out = base + "/" + p.stem().string();
      const int code = run_at(config_paths[i], {}, out);
      int prev = worst.load();
      while (code > prev && !worst.compare_exchange_weak(prev, code)) {
      }
    }
  };

  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(jobs, static_cast<int>(config_paths.size()));
  pool.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return worst.load();
}

}  // namespace dnls::lab
