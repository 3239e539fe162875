#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dnls/grid.hpp"
#include "dnls/solitons.hpp"

namespace dnls {

enum class DiffScheme { spectral, fd4 };

/// Second variation of the action at a soliton, discretized as a dense real
/// symmetric operator on stacked (Re eps, Im eps) samples.
struct RealPairOperator {
  Eigen::MatrixXd matrix;  // 2n x 2n, symmetrized
  double asymmetry = 0.0;  // relative Frobenius asymmetry before symmetrization
  GridSpec grid;
  SolitonParams params;
};

/// Assembles the 2x2 block operator.  Dense assembly is guarded at n <= 4096.
RealPairOperator second_variation(const SolitonParams& p, const GridSpec& g,
                                  DiffScheme scheme = DiffScheme::spectral);

/// Operator applied to a complex field through the stacked real form.
Field apply_operator(const RealPairOperator& op, const Field& eps);

struct SpectrumSummary {
  int n_negative = 0;
  int n_zero = 0;
  std::vector<double> lowest;  // six smallest eigenvalues, ascending
};
SpectrumSummary spectrum_counts(const RealPairOperator& op, double zero_tol);

/// The pair of scalar operators diagonalizing the second variation after the
/// gauge change of unknown: L_plus acts on Re(k), L_minus on Im(k); returns
/// L_plus Re(k) + i L_minus Im(k).
Field apply_lplus_lminus(const SolitonParams& p, const Field& k);

/// Closed-form value of the quadratic form on the frequency direction
/// psi = d_omega phi + mu d_c phi: (c/omega - 4 mu + c mu^2)/sqrt(4 omega - c^2).
double negative_direction_value(double omega, double c, double mu);

/// Same quantity evaluated numerically with finite-difference parameter
/// derivatives and the explicit quadratic form.
double negative_direction_quadratic(const SolitonParams& p, const GridSpec& g);

/// Quadratic form <S''(phi) eps, eps> evaluated through the explicit
/// functional (no dense assembly).
double quadratic_form(const SolitonParams& p, const GridSpec& g, const Field& eps);

struct CoercivityProbe {
  double min_ratio = 0.0;  // min over samples of H(eps)/||eps||_H1^2
  int n_samples = 0;
};

/// Draws localized random smooth fields, optionally projects out the three
/// constraint directions {i phi, dx phi, phi + i mu dx phi}, and reports the
/// smallest Rayleigh quotient seen.
CoercivityProbe coercivity_probe(const SolitonParams& p, const GridSpec& g, int n_samples,
                                 std::uint64_t seed, bool project_constraints);

}  // namespace dnls
