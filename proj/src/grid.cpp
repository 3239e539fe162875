#include "dnls/grid.hpp"

#include <cmath>
#include <random>

#include <unsupported/Eigen/FFT>

namespace dnls {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;  // caches plans per size
  return engine;
}

}  // namespace

Eigen::ArrayXd GridSpec::nodes() const {
  Eigen::ArrayXd x(n);
  const double h = dx();
  for (int m = 0; m < n; ++m) x[m] = x0_offset + m * h;
  return x;
}

Eigen::ArrayXd GridSpec::wavenumbers() const {
  Eigen::ArrayXd k(n);
  const double dk = 2.0 * M_PI / length;
  for (int m = 0; m < n / 2; ++m) k[m] = m * dk;
  for (int m = n / 2; m < n; ++m) k[m] = (m - n) * dk;
  return k;
}

GridSpec make_grid(double length, int n) { return make_grid(length, n, -length / 2); }

GridSpec make_grid(double length, int n, double x0_offset) {
  if (!(length > 0))
    throw DomainError("make_grid: length must be positive, got " + std::to_string(length));
  if (n < 8 || !is_power_of_two(n))
    throw DomainError("make_grid: n must be a power of two >= 8, got " + std::to_string(n));
  return GridSpec{length, n, x0_offset};
}

Field::Field(const GridSpec& g, Eigen::VectorXcd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.n)
    throw GridMismatchError("Field: sample count does not match grid.n");
}

Field Field::zero(const GridSpec& g) { return Field(g, Eigen::VectorXcd::Zero(g.n)); }

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw GridMismatchError("fields live on different grids");
}

bool all_finite(const Field& f) { return f.values.allFinite(); }

Eigen::VectorXcd fft_forward(const Eigen::VectorXcd& x) {
  Eigen::VectorXcd out;
  fft_engine().fwd(out, x);
  return out;
}

Eigen::VectorXcd fft_inverse(const Eigen::VectorXcd& x) {
  Eigen::VectorXcd out;
  fft_engine().inv(out, x);
  return out;
}

Field derivative(const Field& f) {
  const int n = f.grid.n;
  Eigen::VectorXcd hat = fft_forward(f.values);
  const Eigen::ArrayXd k = f.grid.wavenumbers();
  const std::complex<double> i1(0.0, 1.0);
  for (int m = 0; m < n; ++m) hat[m] *= i1 * k[m];
  hat[n / 2] = 0.0;  // Nyquist
  return Field(f.grid, fft_inverse(hat));
}

Field translate(const Field& f, double s) {
  const int n = f.grid.n;
  Eigen::VectorXcd hat = fft_forward(f.values);
  const Eigen::ArrayXd k = f.grid.wavenumbers();
  const std::complex<double> i1(0.0, 1.0);
  for (int m = 0; m < n; ++m) hat[m] *= std::exp(-i1 * k[m] * s);
  hat[n / 2] = 0.0;
  return Field(f.grid, fft_inverse(hat));
}

double inner_l2(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for (int m = 0; m < a.grid.n; ++m)
    s += a.values[m].real() * b.values[m].real() + a.values[m].imag() * b.values[m].imag();
  return a.grid.dx() * s;
}

double l2_norm_sq(const Field& f) { return f.grid.dx() * f.values.squaredNorm(); }

double h1_norm_sq(const Field& f) { return l2_norm_sq(f) + l2_norm_sq(derivative(f)); }

double lp_norm(const Field& f, double p) {
  if (p < 1.0) throw DomainError("lp_norm: p must be >= 1");
  const double s = (f.grid.dx() * f.values.array().abs().pow(p)).sum();
  return std::pow(s, 1.0 / p);
}

Norms norms(const Field& f) {
  return Norms{std::sqrt(l2_norm_sq(f)), std::sqrt(h1_norm_sq(f))};
}

CumulativeIntegral cumulative_integral(const Eigen::ArrayXd& g, const GridSpec& grid) {
  if (g.size() != grid.n)
    throw GridMismatchError("cumulative_integral: sample count does not match grid.n");
  const int n = grid.n;

  Eigen::VectorXcd gc(n);
  for (int m = 0; m < n; ++m) gc[m] = g[m];
  Eigen::VectorXcd hat = fft_forward(gc);

  const double mean = hat[0].real() / n;
  const Eigen::ArrayXd k = grid.wavenumbers();
  const std::complex<double> i1(0.0, 1.0);
  Eigen::VectorXcd anti(n);
  anti[0] = 0.0;
  for (int m = 1; m < n; ++m) anti[m] = hat[m] / (i1 * k[m]);
  anti[n / 2] = 0.0;
  const Eigen::VectorXcd periodic = fft_inverse(anti);

  CumulativeIntegral out;
  out.values.resize(n);
  const double p0 = periodic[0].real();
  const double h = grid.dx();
  for (int m = 0; m < n; ++m) out.values[m] = mean * (m * h) + periodic[m].real() - p0;
  out.boundary_ok =
      std::abs(g[0]) <= kBoundaryTolerance && std::abs(g[n - 1]) <= kBoundaryTolerance;
  return out;
}

Field random_band_limited(const GridSpec& g, int max_mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() {
    // uniform in [-1, 1), fixed arithmetic for reproducibility
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  };
  const Eigen::ArrayXd x = g.nodes();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(g.n);
  const double dk = 2.0 * M_PI / g.length;
  for (int m = -max_mode; m <= max_mode; ++m) {
    const std::complex<double> coef(unit(), unit());
    const double k = m * dk;
    for (int j = 0; j < g.n; ++j)
      v[j] += coef * std::exp(std::complex<double>(0.0, k * x[j]));
  }
  return Field(g, std::move(v));
}

}  // namespace dnls
