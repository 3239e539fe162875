#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dnls/grid.hpp"
#include "dnls/solitons.hpp"

namespace dnls {

/// Fitted parameters (theta_j, x_j, omega_j) per soliton at one time, with
/// the speeds slaved to the frequencies: c_j = c_ref_j + mu_j*(omega_j -
/// omega_ref_j).  The nominal references are frozen at construction.
struct ModulationState {
  double t = 0.0;
  std::vector<double> theta, x, omega;

  std::vector<double> omega_ref, c_ref, mu;
  double min_gap = 0.0;  // required gap between neighboring centers (L/2)

  double residual_norm = 0.0;
  bool converged = false;

  int count() const { return static_cast<int>(theta.size()); }
  double speed(int j) const { return c_ref[j] + mu[j] * (omega[j] - omega_ref[j]); }
  SolitonParams wave_params(int j) const {
    return SolitonParams(omega[j], speed(j), theta[j], x[j]);
  }
  bool admissible() const;

  static ModulationState from_config(const MultiSolitonConfig& cfg);
};

/// Sum of the modulated profiles described by the state.
Field modulated_sum(const ModulationState& s, const GridSpec& g);

/// The 3N orthogonality residuals, blocks of (eps, i R_j), (eps, dx R_j),
/// (eps, R_j + i mu_j dx R_j) with eps = u - sum_j R_j.
Eigen::VectorXd residuals(const Field& u, const ModulationState& s);

/// Jacobian of the residuals in (theta_j, x_j, omega_j), central finite
/// differences with the speed slaving applied.
Eigen::MatrixXd fit_jacobian(const Field& u, const ModulationState& s);

/// Damped Newton solve of the orthogonality system.  Steps that leave the
/// admissible region are halved (up to 20 times).  Returns the best iterate
/// with converged = false if the residual never drops below tol.
ModulationState fit(const Field& u, const ModulationState& guess, double tol = 1e-10,
                    int max_iter = 50);

/// f(omega, c) = 8 sqrt(omega) arctan sqrt((2 sqrt(omega)+c)/(2 sqrt(omega)-c))
/// - 2 sqrt(4 omega - c^2); positive on the admissible set, which certifies
/// invertibility of the fit Jacobian.  Extended by its limit 0 at c = -2 sqrt(omega).
double det_margin(double omega, double c);
double det_margin_dc(double omega, double c);

struct DynamicalLawReport {
  double max_theta_rate_error = 0.0;  // sup |d/dt theta_j - omega_j|
  double max_x_rate_error = 0.0;      // sup |d/dt x_j - c_j|
  double max_omega_rate = 0.0;        // sup |d/dt omega_j|
  bool valid = false;                 // needs at least three fitted states
};

struct TrackResult {
  std::vector<ModulationState> states;
  std::optional<double> failed_at;  // first time the fit did not converge
  DynamicalLawReport laws;
};

/// Streaming tracker: each snapshot is fitted warm-started from the previous
/// state advanced by the dynamical laws.  After the first failure no further
/// fits are attempted.
class ModulationTracker {
public:
  explicit ModulationTracker(ModulationState initial_guess, double tol = 1e-10);

  void observe(double t, const Field& u);
  bool failed() const { return failed_at_.has_value(); }
  const std::vector<ModulationState>& states() const { return states_; }
  TrackResult result() const;

private:
  ModulationState guess_;
  double tol_;
  bool have_state_ = false;
  std::optional<double> failed_at_;
  std::vector<ModulationState> states_;
};

/// Batch version over stored snapshots.
TrackResult track(const std::vector<std::pair<double, Field>>& snapshots,
                  const ModulationState& initial_guess, double tol = 1e-10);

}  // namespace dnls
