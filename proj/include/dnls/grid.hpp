#pragma once

#include <complex>

#include <Eigen/Core>

#include "dnls/errors.hpp"

namespace dnls {

/// |f| threshold at the two box edges below which a field counts as
/// line-supported; gates operations that assume decay at infinity.
inline constexpr double kBoundaryTolerance = 1e-10;

/// Uniform periodic grid standing in for the real line.  Fields are expected
/// to be negligible near both edges; the gates above make that explicit.
struct GridSpec {
  double length = 0.0;   // box size, > 0
  int n = 0;             // sample count, power of two, >= 8
  double x0_offset = 0;  // left endpoint, default -length/2

  double dx() const { return length / n; }
  double node(int m) const { return x0_offset + m * dx(); }
  Eigen::ArrayXd nodes() const;
  /// Angular wavenumbers 2*pi/length * {0,..,n/2-1, -n/2,..,-1} in FFT bin order.
  Eigen::ArrayXd wavenumbers() const;

  bool operator==(const GridSpec& o) const {
    return length == o.length && n == o.n && x0_offset == o.x0_offset;
  }
};

GridSpec make_grid(double length, int n);
GridSpec make_grid(double length, int n, double x0_offset);

/// Complex samples on a grid.  Immutable by convention: operations return
/// new fields and never mutate inputs.
struct Field {
  GridSpec grid;
  Eigen::VectorXcd values;

  Field() = default;
  Field(const GridSpec& g, Eigen::VectorXcd v);

  static Field zero(const GridSpec& g);
};

void require_same_grid(const Field& a, const Field& b);
bool all_finite(const Field& f);

// Spectral transforms (unnormalized forward, 1/n inverse).
Eigen::VectorXcd fft_forward(const Eigen::VectorXcd& x);
Eigen::VectorXcd fft_inverse(const Eigen::VectorXcd& x);

/// Spectral d/dx; the Nyquist mode is zeroed so real fields stay real.
Field derivative(const Field& f);

/// Translate: result(x) = f(x - s), by spectral phase shift.
Field translate(const Field& f, double s);

/// Real L2 pairing Re integral a * conj(b), rectangle quadrature dx*sum.
double inner_l2(const Field& a, const Field& b);

double l2_norm_sq(const Field& f);
double h1_norm_sq(const Field& f);  // ||f||^2 + ||f_x||^2, spectral f_x
double lp_norm(const Field& f, double p);

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
};
Norms norms(const Field& f);

/// Running integral from the left box edge (standing in for -infinity).
/// Spectrally accurate: the zero-mean part integrates by division by ik,
/// the mean contributes a linear ramp.  values[0] == 0.
struct CumulativeIntegral {
  Eigen::ArrayXd values;
  bool boundary_ok = true;  // |g| <= kBoundaryTolerance at both edges
};
CumulativeIntegral cumulative_integral(const Eigen::ArrayXd& g, const GridSpec& grid);

/// Band-limited complex noise: modes |m| <= max_mode with deterministic
/// coefficients drawn from the given seed.  Not normalized.
Field random_band_limited(const GridSpec& g, int max_mode, std::uint64_t seed);

}  // namespace dnls
