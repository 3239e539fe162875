#pragma once

#include <optional>
#include <vector>

#include "dnls/grid.hpp"
#include "dnls/solitons.hpp"

namespace dnls {

/// E(u) = 1/2 ||u_x||^2 + 1/4 Im int |u|^2 conj(u) u_x.  Conserved by the flow.
double energy(const Field& u);
/// M(u) = 1/2 ||u||^2.
double mass(const Field& u);
/// P(u) = 1/2 Im int u conj(u_x).
double momentum(const Field& u);
/// S = E + omega*M + c*P.
double action(const Field& u, double omega, double c);

/// Nehari functional in its two algebraically equal representations:
/// direct = ||u_x||^2 + Im int |u|^2 conj(u) u_x + omega ||u||^2 + c Im int u conj(u_x),
/// sum_of_squares = ||u_x - i c/2 u + i/2 |u|^2 u||^2 + (omega - c^2/4)||u||^2
///                  + c/2 ||u||_L4^4 - 1/4 ||u||_L6^6.
struct NehariValue {
  double direct;
  double sum_of_squares;
};
NehariValue nehari(const Field& u, double omega, double c);

/// L(u) = ||u_x||^2 + omega ||u||^2 + c Im int u conj(u_x)
///      = ||u_x - i c/2 u||^2 + (omega - c^2/4) ||u||^2.
struct LquadValue {
  double direct;
  double completed_square;
};
LquadValue lquad(const Field& u, double omega, double c);

/// Q = M + mu*P, the conserved combination controlling frequency drift.
double q_charge(const Field& u, double mu);

/// Smooth step: the normalized integral of exp(-1/(1-s^2)) over (-1, x process),
/// so psi = 0 for x <= -1, 1 for x >= 1, strictly increasing between.
double smooth_step(double x);
double smooth_step_dx(double x);
double smooth_step_dxx(double x);

/// Moving cut-off data: midpoints x_j^sigma and speeds sigma_j for j = 2..N,
/// widening like sqrt(t + a) with a = L^2/64.  c_window holds the initial
/// modulated speeds used to validate tau overrides.
struct CutoffSpec {
  std::vector<double> anchors;   // size N-1
  std::vector<double> sigmas;    // size N-1
  double a = 0.0;
  std::vector<double> c_window;  // size N, initial speeds (may be empty)
  double c_psi = 0.0;            // recorded constant for (psi')^2 <= C psi etc.
};

/// Builds the cutoff data from initial per-soliton parameters:
/// sigma_j = 2 (omega_j - omega_{j-1}) / (c_j - c_{j-1}), anchors at midpoints.
CutoffSpec make_cutoff_spec(const std::vector<double>& omega0, const std::vector<double>& c0,
                            const std::vector<double>& x_center0, double separation);

/// Constant recorded for the step profile: max of (psi')^2/psi and (psi'')^2/psi'.
double smooth_step_comparison_constant();

/// Sampled partition weights at time t: psi_j and chi_j = psi_j - psi_{j+1},
/// with psi_1 = 1 and psi_{N+1} = 0, so sum_j chi_j = 1.
struct WeightSet {
  std::vector<Eigen::ArrayXd> psi;  // size N (psi_1..psi_N)
  std::vector<Eigen::ArrayXd> chi;  // size N
  int count() const { return static_cast<int>(chi.size()); }
};
WeightSet build_weights(const CutoffSpec& cut, double t, const GridSpec& g);

/// The localized mass/momentum combination
/// 1/2 sum_j int (omega0_j |u|^2 + c0_j Im(u conj(u_x))) chi_j.
double localized_mass_momentum(const Field& u, const WeightSet& w,
                               const std::vector<double>& omega0,
                               const std::vector<double>& c0);

/// The half-line functional under psi_j:
/// 1/2 int (sigma_j/2 |u|^2 + Im(u conj(u_x))) psi_j, or with sigma_j
/// replaced by tau (weight and density together) when tau is given.
/// j is 2-based like the weights it uses (2 <= j <= N).
double halfline_mass_momentum(const Field& u, const CutoffSpec& cut, int j, double t,
                              std::optional<double> tau = std::nullopt);

/// Quadratic form of the localized action around a sum of modulated waves:
/// ||eps_x||^2 + sum_j Im int (|R_j|^2 conj(eps) eps_x + R_j R_j' conj(eps)^2
/// + conj(R_j) R_j' |eps|^2) + sum_j (omega_j int |eps|^2 chi_j
/// + c_j Im int eps conj(eps_x) chi_j).
double action_hessian_form(const Field& eps, const std::vector<Field>& profiles,
                           const std::vector<double>& omega_t, const std::vector<double>& c_t,
                           const WeightSet& w);

}  // namespace dnls
