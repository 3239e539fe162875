#include "dnls/modulation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

namespace dnls {

namespace {

constexpr int kMaxHalvings = 20;
constexpr double kMaxStep = 0.25;

bool params_admissible(double omega, double c) {
  return omega > 0.0 && 4.0 * omega - c * c > 0.0;
}

}  // namespace

bool ModulationState::admissible() const {
  for (int j = 0; j < count(); ++j)
    if (!params_admissible(omega[j], speed(j))) return false;
  if (min_gap > 0.0)
    for (int j = 1; j < count(); ++j)
      if (!(x[j] - x[j - 1] > min_gap)) return false;
  return true;
}

ModulationState ModulationState::from_config(const MultiSolitonConfig& cfg) {
  ModulationState s;
  s.min_gap = cfg.count() > 1 ? cfg.separation / 2.0 : 0.0;
  for (const auto& p : cfg.solitons) {
    s.theta.push_back(p.theta0);
    s.x.push_back(p.x0);
    s.omega.push_back(p.omega);
    s.omega_ref.push_back(p.omega);
    s.c_ref.push_back(p.c);
    s.mu.push_back(p.mu());
  }
  return s;
}

Field modulated_sum(const ModulationState& s, const GridSpec& g) {
  Field sum = Field::zero(g);
  for (int j = 0; j < s.count(); ++j)
    sum.values += soliton_profile(s.wave_params(j), g).values;
  return sum;
}

Eigen::VectorXd residuals(const Field& u, const ModulationState& s) {
  const int n_waves = s.count();
  if (n_waves == 0) throw DomainError("residuals: empty modulation state");
  if (!s.admissible())
    throw ModulationError(ModulationError::Kind::inadmissible_state,
                          "residuals: state outside the admissible region");

  std::vector<Field> profiles;
  profiles.reserve(n_waves);
  for (int j = 0; j < n_waves; ++j) profiles.push_back(soliton_profile(s.wave_params(j), u.grid));

  Field eps(u.grid, u.values);
  for (const auto& r : profiles) eps.values -= r.values;

  const std::complex<double> i1(0.0, 1.0);
  Eigen::VectorXd phi(3 * n_waves);
  for (int j = 0; j < n_waves; ++j) {
    const Field dx = derivative(profiles[j]);
    Field i_r(u.grid, (i1 * profiles[j].values.array()).matrix());
    Field third(u.grid, (profiles[j].values.array() + i1 * s.mu[j] * dx.values.array()).matrix());
    phi[3 * j + 0] = inner_l2(eps, i_r);
    phi[3 * j + 1] = inner_l2(eps, dx);
    phi[3 * j + 2] = inner_l2(eps, third);
  }
  return phi;
}

namespace {

ModulationState shifted(const ModulationState& s, int index, double delta) {
  ModulationState t = s;
  const int j = index / 3;
  switch (index % 3) {
    case 0: t.theta[j] += delta; break;
    case 1: t.x[j] += delta; break;
    default: t.omega[j] += delta; break;
  }
  return t;
}

double fd_step_for(const ModulationState& s, int index) {
  const int j = index / 3;
  double h = 1e-5;
  if (index % 3 == 2) {
    h = 1e-5 * std::max(1.0, std::abs(s.omega[j]));
    for (int tries = 0; tries < 60; ++tries) {
      const ModulationState plus = shifted(s, index, h);
      const ModulationState minus = shifted(s, index, -h);
      if (params_admissible(plus.omega[j], plus.speed(j)) &&
          params_admissible(minus.omega[j], minus.speed(j)))
        return h;
      h *= 0.5;
    }
    throw ModulationError(ModulationError::Kind::inadmissible_state,
                          "fit_jacobian: no admissible frequency step");
  }
  return h;
}

}  // namespace

Eigen::MatrixXd fit_jacobian(const Field& u, const ModulationState& s) {
  const int dim = 3 * s.count();
  Eigen::MatrixXd jac(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const double h = fd_step_for(s, col);
    const Eigen::VectorXd plus = residuals(u, shifted(s, col, h));
    const Eigen::VectorXd minus = residuals(u, shifted(s, col, -h));
    jac.col(col) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

ModulationState fit(const Field& u, const ModulationState& guess, double tol, int max_iter) {
  ModulationState s = guess;
  Eigen::VectorXd phi = residuals(u, s);  // throws if the guess is unusable
  s.residual_norm = phi.norm();
  s.converged = s.residual_norm < tol;

  ModulationState best = s;
  for (int iter = 0; iter < max_iter && !s.converged; ++iter) {
    Eigen::MatrixXd jac;
    try {
      jac = fit_jacobian(u, s);
    } catch (const BoundaryDecayError&) {
      break;  // iterate drifted to the box edge; report the best so far
    } catch (const ModulationError&) {
      break;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw ModulationError(ModulationError::Kind::singular_jacobian,
                            "fit: singular Jacobian in the Newton solve");
    Eigen::VectorXd delta = lu.solve(-phi);
    // trust-region cap: oversized steps can hop between roots of the
    // orthogonality system along its shallow valleys
    const double biggest = delta.cwiseAbs().maxCoeff();
    if (biggest > kMaxStep) delta *= kMaxStep / biggest;

    // halve on admissibility violations, and keep halving until the
    // residual norm decreases so the iteration stays in the local valley
    bool accepted = false;
    bool saw_admissible = false;
    double scale = 1.0;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      ModulationState trial = s;
      for (int j = 0; j < s.count(); ++j) {
        trial.theta[j] = s.theta[j] + scale * delta[3 * j + 0];
        trial.x[j] = s.x[j] + scale * delta[3 * j + 1];
        trial.omega[j] = s.omega[j] + scale * delta[3 * j + 2];
      }
      if (trial.admissible()) {
        try {
          const Eigen::VectorXd phi_trial = residuals(u, trial);
          saw_admissible = true;
          if (phi_trial.norm() < phi.norm()) {
            s = trial;
            phi = phi_trial;
            accepted = true;
            break;
          }
        } catch (const BoundaryDecayError&) {
          // profile left the box; shrink the step
        }
      }
      scale *= 0.5;
    }
    if (!accepted) {
      if (!saw_admissible)
        throw ModulationError(ModulationError::Kind::step_failure,
                              "fit: no admissible Newton step after 20 halvings");
      break;  // stagnated: no decreasing admissible step
    }

    s.residual_norm = phi.norm();
    s.converged = s.residual_norm < tol;
    if (s.residual_norm < best.residual_norm) best = s;
  }
  if (s.converged) return s;
  best.converged = false;
  return best;
}

double det_margin(double omega, double c) {
  if (!(omega > 0.0)) throw DomainError("det_margin: omega must be positive");
  const double s = 2.0 * std::sqrt(omega);
  if (c * c > 4.0 * omega || c == s)
    throw DomainError("det_margin: require -2 sqrt(omega) <= c < 2 sqrt(omega)");
  const double r = std::sqrt((s + c) / (s - c));
  return 8.0 * std::sqrt(omega) * std::atan(r) - 2.0 * std::sqrt(4.0 * omega - c * c);
}

double det_margin_dc(double omega, double c) {
  if (!(omega > 0.0 && 4.0 * omega - c * c > 0.0))
    throw DomainError("det_margin_dc: require c^2 < 4*omega");
  return 2.0 * (c + 2.0 * std::sqrt(omega)) / std::sqrt(4.0 * omega - c * c);
}

ModulationTracker::ModulationTracker(ModulationState initial_guess, double tol)
    : guess_(std::move(initial_guess)), tol_(tol) {}

void ModulationTracker::observe(double t, const Field& u) {
  if (failed_at_) return;
  ModulationState warm = guess_;
  if (have_state_) {
    const double dt = t - warm.t;
    for (int j = 0; j < warm.count(); ++j) {
      warm.theta[j] += warm.omega[j] * dt;
      warm.x[j] += warm.speed(j) * dt;
    }
  }
  warm.t = t;
  try {
    ModulationState fitted = fit(u, warm, tol_);
    fitted.t = t;
    if (!fitted.converged) {
      failed_at_ = t;
      return;
    }
    states_.push_back(fitted);
    guess_ = fitted;
    have_state_ = true;
  } catch (const Error&) {
    failed_at_ = t;
  }
}

TrackResult ModulationTracker::result() const {
  TrackResult out;
  out.states = states_;
  out.failed_at = failed_at_;
  const int m = static_cast<int>(states_.size());
  if (m >= 3) {
    out.laws.valid = true;
    for (int i = 1; i + 1 < m; ++i) {
      const auto& prev = states_[i - 1];
      const auto& cur = states_[i];
      const auto& next = states_[i + 1];
      const double span = next.t - prev.t;
      for (int j = 0; j < cur.count(); ++j) {
        const double dtheta = (next.theta[j] - prev.theta[j]) / span;
        const double dx = (next.x[j] - prev.x[j]) / span;
        const double domega = (next.omega[j] - prev.omega[j]) / span;
        out.laws.max_theta_rate_error =
            std::max(out.laws.max_theta_rate_error, std::abs(dtheta - cur.omega[j]));
        out.laws.max_x_rate_error =
            std::max(out.laws.max_x_rate_error, std::abs(dx - cur.speed(j)));
        out.laws.max_omega_rate = std::max(out.laws.max_omega_rate, std::abs(domega));
      }
    }
  }
  return out;
}

TrackResult track(const std::vector<std::pair<double, Field>>& snapshots,
                  const ModulationState& initial_guess, double tol) {
  ModulationTracker tracker(initial_guess, tol);
  for (const auto& [t, u] : snapshots) tracker.observe(t, u);
  return tracker.result();
}

}  // namespace dnls
