#pragma once

#include <vector>

#include "dnls/grid.hpp"

namespace dnls {

/// Slaving constant mu attached to a speed c: 0 for c < 0, 1 for c = 0,
/// 2/c for c > 0.  Any of these makes the frequency direction of the
/// linearized action negative definite.
double slaving_constant(double c);

/// One traveling wave: frequency omega > 0, speed |c| < 2*sqrt(omega),
/// initial phase and center.  mu is always recomputed from c.
struct SolitonParams {
  double omega = 1.0;
  double c = 0.0;
  double theta0 = 0.0;
  double x0 = 0.0;

  SolitonParams() = default;
  SolitonParams(double omega, double c, double theta0 = 0.0, double x0 = 0.0);

  double mu() const { return slaving_constant(c); }
  double decay_rate() const;  // sqrt(omega - c^2/4)
};

/// Bell-shaped modulus of the traveling-wave profile (even in x).
double profile_modulus(double omega, double c, double x);
/// d/dx of the modulus, in closed form.
double profile_modulus_dx(double omega, double c, double x);
/// Integral of the squared modulus from -infinity to x, in closed form.
/// Serves as the independent reference for the grid-based phase integral.
double phase_integral(double omega, double c, double x);

/// Samples of exp(i*theta0) * phi(x - x0) where phi carries the internal
/// phase exp(i*c*x/2 - i/4 * int_{-inf}^x |phi|^2).  The phase integral is
/// computed on the grid via cumulative_integral of the squared modulus.
Field soliton_profile(const SolitonParams& p, const GridSpec& g);

/// Exact solution at time t: exp(i*omega*t) times the profile moved by c*t.
Field exact_solution(const SolitonParams& p, double t, const GridSpec& g);

/// Parameter derivatives of the sampled profile by central differences with
/// one Richardson step; the step shrinks if it would leave 4*omega > c^2.
struct ProfileDerivatives {
  Field d_omega;
  Field d_c;
};
ProfileDerivatives profile_parameter_derivatives(const SolitonParams& p, const GridSpec& g);

/// All closed forms evaluated at (omega, c): Lp norms of the profile,
/// gradient norm, mass/momentum/energy, and their parameter derivatives.
struct ClosedFormInvariants {
  double l2sq;          // ||phi||_L2^2
  double l4;            // ||phi||_L4^4
  double l6;            // ||phi||_L6^6
  double grad_l2sq;     // ||phi_x||_L2^2
  double mass;
  double momentum;
  double energy;
  double dmass_domega;
  double dmass_dc;
  double dmom_domega;
  double dmom_dc;
};
ClosedFormInvariants closed_form_invariants(double omega, double c);

/// d/domega of Q = M + mu*P along the slaved curve c(omega) = c + mu*(omega' - omega).
/// Positive for the canonical mu; equals minus the frequency-direction value
/// of the linearized action.
double q_charge_omega_derivative(double omega, double c, double mu);

/// L2 norm of -phi_xx - i|phi|^2 phi_x + omega*phi + i*c*phi_x on the
/// sampled profile, spectral derivatives.
double profile_residual(const SolitonParams& p, const GridSpec& g);

/// Ordered family of N solitons with pairwise separation > L and the
/// speed/frequency ratio condition sigma_j in (c_{j-1}, c_j), sigma_j > 0.
struct MultiSolitonConfig {
  std::vector<SolitonParams> solitons;
  double separation = 0.0;          // L
  std::vector<double> sigma;        // sigma_j, j = 2..N
  double omega_star = 0.0;          // min decay rate
  double c_star = 0.0;              // min pairwise speed gap (inf for N = 1)
  double c_star_sigma = 0.0;        // min |sigma_j - c_k| (inf for N = 1)

  int count() const { return static_cast<int>(solitons.size()); }
};

MultiSolitonConfig validate_multi_soliton(const std::vector<double>& omega,
                                          const std::vector<double>& c,
                                          const std::vector<double>& theta0,
                                          const std::vector<double>& x0,
                                          double separation);

}  // namespace dnls
