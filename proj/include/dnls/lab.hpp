#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnls/evolver.hpp"
#include "dnls/functionals.hpp"
#include "dnls/grid.hpp"
#include "dnls/linearized.hpp"
#include "dnls/modulation.hpp"
#include "dnls/solitons.hpp"

namespace dnls::lab {

enum class Scenario { check_formulas, evolve_single, stability, monotonicity, spectrum };

struct PerturbationSpec {
  enum class Kind { none, gaussian_bump, random_smooth };
  Kind kind = Kind::none;
  double h1_size = 0.0;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::check_formulas;
  MultiSolitonConfig multi;
  PerturbationSpec perturbation;
  GridSpec grid;
  EvolverConfig evolver;
  std::uint64_t seed = 0;
  double stability_a0 = 10.0;  // configured A0 for the stability verdict
  double mono_c0 = 10.0;       // C_mono for the monotonicity verdict
  double zero_tol = 1e-6;      // spectrum scenario
  double conservation_tol = 1e-8;  // evolve_single verdict threshold
  bool write_snapshots = false;
  std::string output_dir = "dnls-out";

  double alpha() const { return multi.omega_star / 32.0; }  // derived, never user-set
};

/// Flat key = value format with dotted sections; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::istream& in);
/// Builds and validates a config; unknown keys are errors.
ExperimentConfig build_config(const std::map<std::string, std::string>& kv);
ExperimentConfig load_config(const std::string& path,
                             const std::map<std::string, std::string>& overrides = {});

Field make_perturbation(const ExperimentConfig& cfg);
Field initial_datum(const ExperimentConfig& cfg);

/// One row of diagnostics per output time.
struct DiagnosticsRecord {
  double t = 0.0;
  double e = 0.0, m = 0.0, p = 0.0;
  std::vector<double> q;  // Q_j(R_j(t)), one per soliton
  double eps_l2 = 0.0, eps_h1 = 0.0;
  double i_value = 0.0;
  std::vector<double> i_j;  // j = 2..N
  double h_value = 0.0;
  std::vector<double> theta, x, omega, c;
  double fit_residual = 0.0;
};

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& rows,
                           int n_waves);

/// Shared core of the evolution scenarios: evolve, track modulation, record.
struct TrackedRun {
  std::vector<DiagnosticsRecord> records;
  std::optional<double> fit_failed_at;
  std::optional<std::string> runtime_failure;
  bool boundary_leak = false;

  double eps0_h1 = 0.0;
  double sup_eps_h1 = 0.0;
  double sup_eps_l2 = 0.0;
  std::vector<double> max_omega_drift;     // per soliton
  double max_i_drift = 0.0;                // max_t (I(t) - I(0)), signed
  std::vector<double> max_ij_drift;        // per j = 2..N, signed max
  double max_decomp_residual = 0.0;
  double max_q_drift = 0.0;
  double e_drift = 0.0, m_drift = 0.0, p_drift = 0.0;
  DynamicalLawReport laws;

  std::vector<double> omega_t0, c_t0;  // modulated weights frozen at t = 0
};
TrackedRun tracked_evolution(const ExperimentConfig& cfg, const std::string& snapshot_dir = "");

struct CheckEntry {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CheckFormulasReport {
  std::vector<CheckEntry> checks;
  bool all_pass = true;
};
CheckFormulasReport run_check_formulas(const ExperimentConfig& cfg);

struct StabilityReport {
  TrackedRun run;
  double delta = 0.0;
  double tail_scale = 0.0;      // exp(-alpha * L)
  double ratio = 0.0;           // sup eps_h1 / (delta + tail_scale)
  bool ratio_pass = false;      // ratio <= configured A0
  bool fit_ok = false;
};
StabilityReport run_stability_experiment(const ExperimentConfig& cfg);

struct MonotonicityReport {
  TrackedRun run;
  double tol_mono = 0.0;  // C_mono * (sup ||eps||_L2^2 / L + exp(-omega_star L/16))
  bool drift_pass = false;
  bool decomposition_pass = false;
};
MonotonicityReport run_monotonicity_experiment(const ExperimentConfig& cfg);

struct SpectrumWaveReport {
  SolitonParams params;
  SpectrumSummary spectrum;
  double asymmetry = 0.0;
  double lminus_residual = 0.0;  // L_minus on the modulus profile
  double lplus_residual = 0.0;   // L_plus on its derivative
  double recall_closed = 0.0;    // frequency-direction value, closed form
  double recall_numeric = 0.0;
  double kappa_constrained = 0.0;
  double min_ratio_unconstrained = 0.0;
};
struct SpectrumReport {
  std::vector<SpectrumWaveReport> waves;
  bool pass = true;
};
SpectrumReport run_spectrum(const ExperimentConfig& cfg);

/// Runs the configured scenario, writing diagnostics.csv, summary.json and
/// plotdata/*.tsv under out_dir.  Returns the process exit code (0 ok,
/// 1 runtime failure, 2 config failure handled by the caller).
int run_scenario(const ExperimentConfig& cfg, const std::string& out_dir);

/// profile/fit utility commands (CLI-level, not scenarios).
int run_profile(const ExperimentConfig& cfg, const std::string& out_dir);
int run_fit(const ExperimentConfig& cfg, const std::string& out_dir);

/// Top-level entry: load, validate, dispatch.  Exit codes 0/1/2.
int run(const std::string& config_path, const std::map<std::string, std::string>& overrides,
        const std::string& cli_output_dir);

/// Same, but writes to exactly the given directory (no OUTPUT_DIR lookup).
int run_at(const std::string& config_path, const std::map<std::string, std::string>& overrides,
           const std::string& exact_output_dir);

/// Fans independent configs out to a small worker pool; returns the max exit code.
int sweep(const std::vector<std::string>& config_paths, int jobs,
          const std::string& cli_output_dir);

/// Resolves the output directory: OUTPUT_DIR env > CLI flag > config key.
std::string resolve_output_dir(const ExperimentConfig& cfg, const std::string& cli_output_dir);

}  // namespace dnls::lab
