#include "dnls/linearized.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "dnls/functionals.hpp"

namespace dnls {

namespace {

// Circulant differentiation matrices: first column from the inverse
// transform of the multiplier, wrapped around.
Eigen::MatrixXd circulant_from_multiplier(const GridSpec& g,
                                          const Eigen::VectorXcd& multiplier) {
  const int n = g.n;
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(n);
  e0[0] = 1.0;
  const Eigen::VectorXcd col = fft_inverse(multiplier.cwiseProduct(fft_forward(e0)));
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = col[(i - j + n) % n].real();
  return out;
}

Eigen::MatrixXd dx_matrix(const GridSpec& g, DiffScheme scheme) {
  const int n = g.n;
  if (scheme == DiffScheme::spectral) {
    const Eigen::ArrayXd k = g.wavenumbers();
    Eigen::VectorXcd mult(n);
    for (int m = 0; m < n; ++m) mult[m] = std::complex<double>(0.0, k[m]);
    mult[n / 2] = 0.0;
    return circulant_from_multiplier(g, mult);
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const double h = g.dx();
  for (int i = 0; i < n; ++i) {
    d(i, (i + 1) % n) += 8.0 / (12.0 * h);
    d(i, (i - 1 + n) % n) -= 8.0 / (12.0 * h);
    d(i, (i + 2) % n) -= 1.0 / (12.0 * h);
    d(i, (i - 2 + n) % n) += 1.0 / (12.0 * h);
  }
  return d;
}

Eigen::MatrixXd dxx_matrix(const GridSpec& g, DiffScheme scheme) {
  const int n = g.n;
  if (scheme == DiffScheme::spectral) {
    const Eigen::ArrayXd k = g.wavenumbers();
    Eigen::VectorXcd mult(n);
    for (int m = 0; m < n; ++m) mult[m] = -k[m] * k[m];
    return circulant_from_multiplier(g, mult);
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const double h2 = g.dx() * g.dx();
  for (int i = 0; i < n; ++i) {
    d(i, i) -= 30.0 / (12.0 * h2);
    d(i, (i + 1) % n) += 16.0 / (12.0 * h2);
    d(i, (i - 1 + n) % n) += 16.0 / (12.0 * h2);
    d(i, (i + 2) % n) -= 1.0 / (12.0 * h2);
    d(i, (i - 2 + n) % n) -= 1.0 / (12.0 * h2);
  }
  return d;
}

WeightSet trivial_weights(const GridSpec& g) {
  WeightSet w;
  w.psi.push_back(Eigen::ArrayXd::Ones(g.n));
  w.chi.push_back(Eigen::ArrayXd::Ones(g.n));
  return w;
}

}  // namespace

RealPairOperator second_variation(const SolitonParams& p, const GridSpec& g, DiffScheme scheme) {
  if (g.n > 4096)
    throw DomainError("second_variation: dense assembly guarded at n <= 4096");
  const int n = g.n;

  const Field phi = soliton_profile(p, g);
  const Field phi_x = derivative(phi);
  Eigen::ArrayXd re(n), im(n), re_x(n), im_x(n), mod_sq(n);
  for (int m = 0; m < n; ++m) {
    re[m] = phi.values[m].real();
    im[m] = phi.values[m].imag();
    re_x[m] = phi_x.values[m].real();
    im_x[m] = phi_x.values[m].imag();
    mod_sq[m] = std::norm(phi.values[m]);
  }

  const Eigen::MatrixXd dx = dx_matrix(g, scheme);
  const Eigen::MatrixXd dxx = dxx_matrix(g, scheme);

  Eigen::MatrixXd a(2 * n, 2 * n);
  // (1,1): -dxx + omega + 2 Re(phi) Im(phi_x)
  a.topLeftCorner(n, n) = -dxx;
  a.topLeftCorner(n, n).diagonal() += (p.omega + 2.0 * re * im_x).matrix();
  // (1,2): 2 Im(phi) Im(phi_x) + (|phi|^2 - c) dx
  a.topRightCorner(n, n) = (mod_sq - p.c).matrix().asDiagonal() * dx;
  a.topRightCorner(n, n).diagonal() += (2.0 * im * im_x).matrix();
  // (2,1): -2 Re(phi) Re(phi_x) - (|phi|^2 - c) dx
  a.bottomLeftCorner(n, n) = (p.c - mod_sq).matrix().asDiagonal() * dx;
  a.bottomLeftCorner(n, n).diagonal() -= (2.0 * re * re_x).matrix();
  // (2,2): -dxx + omega - 2 Im(phi) Re(phi_x)
  a.bottomRightCorner(n, n) = -dxx;
  a.bottomRightCorner(n, n).diagonal() += (p.omega - 2.0 * im * re_x).matrix();

  RealPairOperator op;
  op.asymmetry = (a - a.transpose()).norm() / std::max(1.0, a.norm());
  op.matrix = 0.5 * (a + a.transpose());
  op.grid = g;
  op.params = p;
  return op;
}

Field apply_operator(const RealPairOperator& op, const Field& eps) {
  if (!(eps.grid == op.grid)) throw GridMismatchError("apply_operator: grid mismatch");
  const int n = op.grid.n;
  Eigen::VectorXd stacked(2 * n);
  for (int m = 0; m < n; ++m) {
    stacked[m] = eps.values[m].real();
    stacked[n + m] = eps.values[m].imag();
  }
  const Eigen::VectorXd out = op.matrix * stacked;
  Eigen::VectorXcd v(n);
  for (int m = 0; m < n; ++m) v[m] = {out[m], out[n + m]};
  return Field(op.grid, std::move(v));
}

SpectrumSummary spectrum_counts(const RealPairOperator& op, double zero_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op.matrix, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("spectrum_counts: eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();

  SpectrumSummary out;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -zero_tol)
      ++out.n_negative;
    else if (ev[i] <= zero_tol)
      ++out.n_zero;
  }
  const int take = std::min<int>(6, static_cast<int>(ev.size()));
  out.lowest.assign(ev.data(), ev.data() + take);
  return out;
}

Field apply_lplus_lminus(const SolitonParams& p, const Field& k) {
  const GridSpec& g = k.grid;
  const Eigen::ArrayXd x = g.nodes();
  Eigen::ArrayXd vphi(g.n), vphi_x(g.n);
  for (int m = 0; m < g.n; ++m) {
    vphi[m] = profile_modulus(p.omega, p.c, x[m] - p.x0);
    vphi_x[m] = profile_modulus_dx(p.omega, p.c, x[m] - p.x0);
  }
  const double shift = p.omega - 0.25 * p.c * p.c;

  Eigen::VectorXcd re_part(g.n), im_part(g.n);
  for (int m = 0; m < g.n; ++m) {
    re_part[m] = k.values[m].real();
    im_part[m] = k.values[m].imag();
  }
  Field a(g, std::move(re_part));
  Field b(g, std::move(im_part));
  const Field a_xx = derivative(derivative(a));
  const Field b_x = derivative(b);
  const Field b_xx = derivative(b_x);

  Eigen::VectorXcd out(g.n);
  for (int m = 0; m < g.n; ++m) {
    const double v2 = vphi[m] * vphi[m];
    const double v4 = v2 * v2;
    const double lp = -a_xx.values[m].real() + shift * a.values[m].real() +
                      1.5 * p.c * v2 * a.values[m].real() - (15.0 / 16.0) * v4 * a.values[m].real();
    const double lm = -b_xx.values[m].real() + shift * b.values[m].real() +
                      0.5 * p.c * v2 * b.values[m].real() - (3.0 / 16.0) * v4 * b.values[m].real() +
                      0.5 * vphi[m] * vphi_x[m] * b.values[m].real() -
                      0.5 * v2 * b_x.values[m].real();
    out[m] = {lp, lm};
  }
  return Field(g, std::move(out));
}

double negative_direction_value(double omega, double c, double mu) {
  if (!(omega > 0.0 && 4.0 * omega - c * c > 0.0))
    throw DomainError("negative_direction_value: require c^2 < 4*omega");
  return (c / omega - 4.0 * mu + c * mu * mu) / std::sqrt(4.0 * omega - c * c);
}

double quadratic_form(const SolitonParams& p, const GridSpec& g, const Field& eps) {
  const Field phi = soliton_profile(p, g);
  return action_hessian_form(eps, {phi}, {p.omega}, {p.c}, trivial_weights(g));
}

double negative_direction_quadratic(const SolitonParams& p, const GridSpec& g) {
  const ProfileDerivatives d = profile_parameter_derivatives(p, g);
  Field psi(g, d.d_omega.values + p.mu() * d.d_c.values);
  return quadratic_form(p, g, psi);
}

CoercivityProbe coercivity_probe(const SolitonParams& p, const GridSpec& g, int n_samples,
                                 std::uint64_t seed, bool project_constraints) {
  const Field phi = soliton_profile(p, g);
  const Field phi_x = derivative(phi);
  const std::complex<double> i1(0.0, 1.0);

  std::vector<Field> constraints;
  constraints.emplace_back(g, (i1 * phi.values.array()).matrix());
  constraints.push_back(phi_x);
  constraints.emplace_back(g, (phi.values.array() + i1 * p.mu() * phi_x.values.array()).matrix());
  // orthonormalize in the real inner product
  std::vector<Field> basis;
  for (const Field& c : constraints) {
    Field v = c;
    for (const Field& b : basis) v.values -= inner_l2(v, b) * b.values;
    const double norm = std::sqrt(l2_norm_sq(v));
    if (norm > 1e-12) {
      v.values /= norm;
      basis.push_back(std::move(v));
    }
  }

  // localized envelope around the wave; width tied to the decay rate
  const double width = 4.0 / p.decay_rate();
  const Eigen::ArrayXd x = g.nodes();
  Eigen::ArrayXd envelope(g.n);
  for (int m = 0; m < g.n; ++m) {
    const double dxc = (x[m] - p.x0) / width;
    envelope[m] = std::exp(-dxc * dxc);
  }

  CoercivityProbe probe;
  probe.n_samples = n_samples;
  probe.min_ratio = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    Field draw = random_band_limited(g, 10, seed + 1000003ull * s);
    draw.values.array() *= envelope.cast<std::complex<double>>();
    if (project_constraints)
      for (const Field& b : basis) draw.values -= inner_l2(draw, b) * b.values;
    const double h1 = h1_norm_sq(draw);
    if (h1 < 1e-20) continue;
    const double h = action_hessian_form(draw, {phi}, {p.omega}, {p.c}, trivial_weights(g));
    probe.min_ratio = std::min(probe.min_ratio, h / h1);
  }
  return probe;
}

}  // namespace dnls
