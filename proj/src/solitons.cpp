#include "dnls/solitons.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dnls {

namespace {

constexpr double kLargeArg = 690.0;  // cosh overflows near 710

void require_admissible(double omega, double c) {
  if (!(omega > 0.0) || !(4.0 * omega - c * c > 0.0)) {
    std::ostringstream msg;
    msg << "inadmissible soliton parameters: omega = " << omega << ", c = " << c
        << " (need omega > 0 and c^2 < 4*omega)";
    throw DomainError(msg.str());
  }
}

// arctan sqrt((2 sqrt(omega) + c) / (2 sqrt(omega) - c)), the recurring angle.
double profile_angle(double omega, double c) {
  const double s = 2.0 * std::sqrt(omega);
  return std::atan(std::sqrt((s + c) / (s - c)));
}

}  // namespace

double slaving_constant(double c) {
  if (c < 0.0) return 0.0;
  if (c == 0.0) return 1.0;
  return 2.0 / c;
}

SolitonParams::SolitonParams(double omega_, double c_, double theta0_, double x0_)
    : omega(omega_), c(c_), theta0(theta0_), x0(x0_) {
  require_admissible(omega, c);
  // The chosen mu must make the frequency direction negative (eq. holds for
  // all three branches whenever c^2 < 4*omega; checked defensively).
  const double m = mu();
  if (!(c / omega - 4.0 * m + c * m * m < 0.0))
    throw DomainError("slaving constant does not yield a negative frequency direction");
}

double SolitonParams::decay_rate() const { return std::sqrt(omega - 0.25 * c * c); }

double profile_modulus(double omega, double c, double x) {
  require_admissible(omega, c);
  const double b = std::sqrt(4.0 * omega - c * c);
  if (std::abs(b * x) > kLargeArg) return 0.0;
  const double w =
      std::sqrt(omega) / (4.0 * omega - c * c) * (std::cosh(b * x) - c / (2.0 * std::sqrt(omega)));
  return 1.0 / std::sqrt(w);
}

double profile_modulus_dx(double omega, double c, double x) {
  require_admissible(omega, c);
  const double b = std::sqrt(4.0 * omega - c * c);
  if (std::abs(b * x) > kLargeArg) return 0.0;
  const double pref = std::sqrt(omega) / (4.0 * omega - c * c);
  const double w = pref * (std::cosh(b * x) - c / (2.0 * std::sqrt(omega)));
  const double wx = pref * b * std::sinh(b * x);
  return -0.5 * wx / (w * std::sqrt(w));
}

double phase_integral(double omega, double c, double x) {
  require_admissible(omega, c);
  const double b = std::sqrt(4.0 * omega - c * c);
  const double s = 2.0 * std::sqrt(omega);
  const double r = std::sqrt((s + c) / (s - c));
  return 4.0 * (std::atan(r * std::tanh(0.5 * b * x)) + std::atan(r));
}

Field soliton_profile(const SolitonParams& p, const GridSpec& g) {
  const Eigen::ArrayXd x = g.nodes();
  const int n = g.n;

  Eigen::ArrayXd mod(n), mod_sq(n);
  for (int m = 0; m < n; ++m) {
    mod[m] = profile_modulus(p.omega, p.c, x[m] - p.x0);
    mod_sq[m] = mod[m] * mod[m];
  }
  if (mod[0] > kBoundaryTolerance || mod[n - 1] > kBoundaryTolerance) {
    std::ostringstream msg;
    msg << "soliton_profile: tail not contained in box (|phi| = "
        << std::max(mod[0], mod[n - 1]) << " at an edge, center x0 = " << p.x0 << ")";
    throw BoundaryDecayError(msg.str());
  }

  const CumulativeIntegral phase = cumulative_integral(mod_sq, g);
  Eigen::VectorXcd v(n);
  for (int m = 0; m < n; ++m) {
    const double theta = p.theta0 + 0.5 * p.c * (x[m] - p.x0) - 0.25 * phase.values[m];
    v[m] = mod[m] * std::complex<double>(std::cos(theta), std::sin(theta));
  }
  return Field(g, std::move(v));
}

Field exact_solution(const SolitonParams& p, double t, const GridSpec& g) {
  SolitonParams moved(p.omega, p.c, p.theta0 + p.omega * t, p.x0 + p.c * t);
  return soliton_profile(moved, g);
}

namespace {

bool params_ok(double omega, double c) { return omega > 0.0 && 4.0 * omega - c * c > 0.0; }

// Central difference with one Richardson step; build(v) samples the profile
// at parameter value v along one coordinate.
template <typename Build>
Field richardson_derivative(double v0, double h0, Build&& build, auto admissible) {
  double h = h0;
  while (!(admissible(v0 + h) && admissible(v0 - h))) {
    h *= 0.5;
    if (h < 1e-12 * std::max(1.0, std::abs(v0)))
      throw DomainError("parameter derivative: no admissible finite-difference step");
  }
  auto central = [&](double hh) {
    Field plus = build(v0 + hh);
    Field minus = build(v0 - hh);
    return Field(plus.grid, ((plus.values - minus.values) / (2.0 * hh)).eval());
  };
  const Field d_h = central(h);
  const Field d_h2 = central(0.5 * h);
  return Field(d_h.grid, ((4.0 * d_h2.values - d_h.values) / 3.0).eval());
}

}  // namespace

ProfileDerivatives profile_parameter_derivatives(const SolitonParams& p, const GridSpec& g) {
  const double h_omega = 1e-6 * std::max(1.0, std::abs(p.omega));
  const double h_c = 1e-6 * std::max(1.0, std::abs(p.c));
  Field d_omega = richardson_derivative(
      p.omega, h_omega,
      [&](double w) { return soliton_profile(SolitonParams(w, p.c, p.theta0, p.x0), g); },
      [&](double w) { return params_ok(w, p.c); });
  Field d_c = richardson_derivative(
      p.c, h_c,
      [&](double cc) { return soliton_profile(SolitonParams(p.omega, cc, p.theta0, p.x0), g); },
      [&](double cc) { return params_ok(p.omega, cc); });
  return ProfileDerivatives{std::move(d_omega), std::move(d_c)};
}

ClosedFormInvariants closed_form_invariants(double omega, double c) {
  require_admissible(omega, c);
  const double a = profile_angle(omega, c);
  const double d = std::sqrt(4.0 * omega - c * c);
  ClosedFormInvariants out;
  out.l2sq = 8.0 * a;
  out.l4 = 16.0 * c * a + 8.0 * d;
  out.l6 = 32.0 * (c * c + 2.0 * omega) * a + 24.0 * c * d;
  out.grad_l2sq = 8.0 * omega * a;
  out.mass = 4.0 * a;
  out.momentum = d;
  out.energy = -0.5 * c * d;
  out.dmass_domega = -c / (omega * d);
  out.dmass_dc = 2.0 / d;
  out.dmom_domega = 2.0 / d;
  out.dmom_dc = -c / d;
  return out;
}

double q_charge_omega_derivative(double omega, double c, double mu) {
  require_admissible(omega, c);
  return (4.0 * mu - c / omega - c * mu * mu) / std::sqrt(4.0 * omega - c * c);
}

double profile_residual(const SolitonParams& p, const GridSpec& g) {
  const Field u = soliton_profile(p, g);
  const Field ux = derivative(u);
  const Field uxx = derivative(ux);
  Eigen::VectorXcd r(g.n);
  const std::complex<double> i1(0.0, 1.0);
  for (int m = 0; m < g.n; ++m) {
    const double sq = std::norm(u.values[m]);
    r[m] = -uxx.values[m] - i1 * sq * ux.values[m] + p.omega * u.values[m] +
           i1 * p.c * ux.values[m];
  }
  return std::sqrt(l2_norm_sq(Field(g, std::move(r))));
}

MultiSolitonConfig validate_multi_soliton(const std::vector<double>& omega,
                                          const std::vector<double>& c,
                                          const std::vector<double>& theta0,
                                          const std::vector<double>& x0,
                                          double separation) {
  const std::size_t n = omega.size();
  if (n == 0 || c.size() != n || theta0.size() != n || x0.size() != n)
    throw MultiSolitonError(MultiSolitonError::Kind::bad_parameters,
                            "multi-soliton config: parameter lists empty or of unequal length");
  if (!(separation > 0.0))
    throw MultiSolitonError(MultiSolitonError::Kind::bad_parameters,
                            "multi-soliton config: separation L must be positive");

  for (std::size_t j = 0; j < n; ++j) {
    if (!(omega[j] > 0.0) || !(4.0 * omega[j] - c[j] * c[j] > 0.0)) {
      std::ostringstream msg;
      msg << "soliton " << j + 1 << ": omega = " << omega[j] << ", c = " << c[j]
          << " violates c^2 < 4*omega (lump endpoint excluded)";
      throw MultiSolitonError(MultiSolitonError::Kind::bad_parameters, msg.str());
    }
  }
  for (std::size_t j = 1; j < n; ++j) {
    if (!(c[j] > c[j - 1]))
      throw MultiSolitonError(MultiSolitonError::Kind::unordered_speeds,
                              "speeds c_j must be strictly increasing");
    if (!(x0[j] > x0[j - 1]))
      throw MultiSolitonError(MultiSolitonError::Kind::unordered_positions,
                              "centers x0_j must be strictly increasing");
    if (x0[j] - x0[j - 1] < separation * (1.0 - 1e-12)) {
      std::ostringstream msg;
      msg << "centers " << j << " and " << j + 1 << " are " << x0[j] - x0[j - 1]
          << " apart, need at least L = " << separation;
      throw MultiSolitonError(MultiSolitonError::Kind::separation_too_small, msg.str());
    }
  }

  MultiSolitonConfig cfg;
  cfg.separation = separation;
  for (std::size_t j = 0; j < n; ++j) cfg.solitons.emplace_back(omega[j], c[j], theta0[j], x0[j]);

  for (std::size_t j = 1; j < n; ++j) {
    const double s = 2.0 * (omega[j] - omega[j - 1]) / (c[j] - c[j - 1]);
    if (!(s > 0.0) || !(c[j - 1] < s && s < c[j])) {
      std::ostringstream msg;
      msg << "speed-frequency ratio condition failed: sigma_" << j + 1 << " = " << s
          << " must lie in (" << c[j - 1] << ", " << c[j] << ") and be positive";
      throw MultiSolitonError(MultiSolitonError::Kind::sigma_condition, msg.str());
    }
    cfg.sigma.push_back(s);
  }

  cfg.omega_star = std::numeric_limits<double>::infinity();
  for (const auto& p : cfg.solitons) cfg.omega_star = std::min(cfg.omega_star, p.decay_rate());

  cfg.c_star = std::numeric_limits<double>::infinity();
  cfg.c_star_sigma = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      if (j != k) cfg.c_star = std::min(cfg.c_star, std::abs(c[j] - c[k]));
      if (j >= 1) cfg.c_star_sigma = std::min(cfg.c_star_sigma, std::abs(cfg.sigma[j - 1] - c[k]));
    }
  return cfg;
}

}  // namespace dnls
