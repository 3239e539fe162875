#include "dnls/evolver.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace dnls {

namespace {

using Cvec = Eigen::VectorXcd;
const std::complex<double> kI(0.0, 1.0);

bool near_integer_ratio(double num, double den) {
  const double r = num / den;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

// Evaluates the nonlinear term in spectral space, padding cubic products to
// twice the resolution (exact dealiasing for cubic terms).
class NonlinearEvaluator {
public:
  NonlinearEvaluator(const GridSpec& g, EquationForm form, double sigma, DealiasRule rule,
                     double mean_advection = 0.0)
      : grid_(g), form_(form), sigma_(sigma), rule_(rule), mean_(mean_advection),
        k_(g.wavenumbers()) {}

  Cvec operator()(const Cvec& u_hat) const {
    if (rule_ == DealiasRule::pad2x) return padded(u_hat);
    return direct(u_hat);
  }

private:
  Cvec pad(const Cvec& hat) const {
    const int n = grid_.n;
    Cvec out = Cvec::Zero(2 * n);
    for (int m = 0; m < n / 2; ++m) out[m] = hat[m];
    for (int m = n / 2 + 1; m < n; ++m) out[m + n] = hat[m];
    return out;
  }

  Cvec truncate(const Cvec& fine) const {
    const int n = grid_.n;
    Cvec out(n);
    for (int m = 0; m < n / 2; ++m) out[m] = fine[m];
    out[n / 2] = 0.0;
    for (int m = n / 2 + 1; m < n; ++m) out[m] = fine[m + n];
    return out;
  }

  Cvec spectral_dx(const Cvec& hat) const {
    const int n = grid_.n;
    Cvec out(n);
    for (int m = 0; m < n; ++m) out[m] = kI * k_[m] * hat[m];
    out[n / 2] = 0.0;
    return out;
  }

  Cvec padded(const Cvec& u_hat) const {
    const Cvec u_fine = fft_inverse(pad(u_hat)) * 2.0;
    const int nf = 2 * grid_.n;
    Cvec prod(nf);
    switch (form_) {
      case EquationForm::kaup_newell: {
        for (int m = 0; m < nf; ++m) prod[m] = std::norm(u_fine[m]) * u_fine[m];
        Cvec out = spectral_dx((-1.0) * truncate(fft_forward(prod) / 2.0));
        if (mean_ != 0.0) out += mean_ * spectral_dx(u_hat);
        return out;
      }
      case EquationForm::chen_liu_lee: {
        const Cvec ux_fine = fft_inverse(pad(spectral_dx(u_hat))) * 2.0;
        for (int m = 0; m < nf; ++m)
          prod[m] = -(std::norm(u_fine[m]) - mean_) * ux_fine[m];
        return truncate(fft_forward(prod) / 2.0);
      }
      case EquationForm::boosted: {
        const Cvec ux_fine = fft_inverse(pad(spectral_dx(u_hat))) * 2.0;
        for (int m = 0; m < nf; ++m)
          prod[m] = -(std::norm(u_fine[m]) - mean_) * ux_fine[m] -
                    std::norm(u_fine[m]) * kI * 0.5 * sigma_ * u_fine[m];
        return truncate(fft_forward(prod) / 2.0);
      }
    }
    return Cvec::Zero(grid_.n);
  }

  Cvec direct(const Cvec& u_hat) const {
    const int n = grid_.n;
    const Cvec u = fft_inverse(u_hat);
    Cvec prod(n);
    switch (form_) {
      case EquationForm::kaup_newell: {
        for (int m = 0; m < n; ++m) prod[m] = std::norm(u[m]) * u[m];
        Cvec out = spectral_dx((-1.0) * fft_forward(prod));
        if (mean_ != 0.0) out += mean_ * spectral_dx(u_hat);
        return out;
      }
      case EquationForm::chen_liu_lee: {
        const Cvec ux = fft_inverse(spectral_dx(u_hat));
        for (int m = 0; m < n; ++m) prod[m] = -(std::norm(u[m]) - mean_) * ux[m];
        return fft_forward(prod);
      }
      case EquationForm::boosted: {
        const Cvec ux = fft_inverse(spectral_dx(u_hat));
        for (int m = 0; m < n; ++m)
          prod[m] = -(std::norm(u[m]) - mean_) * ux[m] -
                    std::norm(u[m]) * kI * 0.5 * sigma_ * u[m];
        return fft_forward(prod);
      }
    }
    return Cvec::Zero(n);
  }

  GridSpec grid_;
  EquationForm form_;
  double sigma_;
  DealiasRule rule_;
  double mean_ = 0.0;
  Eigen::ArrayXd k_;
};

// phi functions of exponential integrators, stable near z = 0 via Taylor.
std::complex<double> phi_fn(int order, std::complex<double> z) {
  if (std::abs(z) < 0.5) {
    // phi_p(z) = sum_{j>=0} z^j / (j + p)!
    std::complex<double> term = 1.0;
    for (int j = 1; j <= order; ++j) term /= static_cast<double>(j);
    std::complex<double> sum = term;
    for (int j = 1; j <= 16; ++j) {
      term *= z / static_cast<double>(j + order);
      sum += term;
    }
    return sum;
  }
  switch (order) {
    case 1: return (std::exp(z) - 1.0) / z;
    case 2: return (std::exp(z) - 1.0 - z) / (z * z);
    default: return (std::exp(z) - 1.0 - z - 0.5 * z * z) / (z * z * z);
  }
}

// Per-mode coefficients of the 4-stage exponential Runge-Kutta scheme of
// Cox-Matthews type: exact linear phase plus phi-function quadrature of the
// nonlinearity.  All arrays are diagonal in transform space.
struct SchemeCoefficients {
  Cvec e_half, e_full;  // exp(z/2), exp(z) with z = -i k^2 dt
  Cvec f_half;          // dt/2 * phi_1(z/2), the stage propagator weight
  Cvec b1, b23, b4;     // final combination weights
};

SchemeCoefficients scheme_coefficients(const GridSpec& g, double dt, double mean_advection) {
  const Eigen::ArrayXd k = g.wavenumbers();
  SchemeCoefficients s;
  for (Cvec* v : {&s.e_half, &s.e_full, &s.f_half, &s.b1, &s.b23, &s.b4}) v->resize(g.n);
  for (int m = 0; m < g.n; ++m) {
    const std::complex<double> z = -kI * (k[m] * k[m] + mean_advection * k[m]) * dt;
    s.e_half[m] = std::exp(0.5 * z);
    s.e_full[m] = std::exp(z);
    s.f_half[m] = 0.5 * dt * phi_fn(1, 0.5 * z);
    const std::complex<double> p1 = phi_fn(1, z);
    const std::complex<double> p2 = phi_fn(2, z);
    const std::complex<double> p3 = phi_fn(3, z);
    s.b1[m] = dt * (p1 - 3.0 * p2 + 4.0 * p3);
    s.b23[m] = dt * (2.0 * p2 - 4.0 * p3);  // b2 = b3
    s.b4[m] = dt * (4.0 * p3 - p2);
  }
  return s;
}

Cvec etdrk4_step(const Cvec& u_hat, const SchemeCoefficients& s,
                 const NonlinearEvaluator& nl) {
  const Cvec k1 = nl(u_hat);
  const Cvec eu = s.e_half.cwiseProduct(u_hat);
  const Cvec a = eu + s.f_half.cwiseProduct(k1);
  const Cvec k2 = nl(a);
  const Cvec b = eu + s.f_half.cwiseProduct(k2);
  const Cvec k3 = nl(b);
  const Cvec c = s.e_half.cwiseProduct(a) + s.f_half.cwiseProduct(2.0 * k3 - k1);
  const Cvec k4 = nl(c);
  return s.e_full.cwiseProduct(u_hat) + s.b1.cwiseProduct(k1) + s.b23.cwiseProduct(k2 + k3) +
         s.b4.cwiseProduct(k4);
}

// Nonlinearity-weighted mean of |u|^2 (int |u|^6 / int |u|^4).  This constant
// advection moves into the exact propagator, so the Runge-Kutta stages only
// see the residual |u|^2 - mean, which vanishes where the cubic term acts
// hardest.  For a plane wave the split is exact.
double mean_advection_of(const Field& u) {
  double num = 0.0, den = 0.0;
  for (int m = 0; m < u.grid.n; ++m) {
    const double a2 = std::norm(u.values[m]);
    num += a2 * a2 * a2;
    den += a2 * a2;
  }
  return den > 1e-300 ? num / den : 0.0;
}

}  // namespace

void EvolverConfig::validate(const GridSpec& g) const {
  if (!(dt > 0.0)) throw DomainError("evolver: dt must be positive");
  if (!(t_end >= 0.0)) throw DomainError("evolver: t_end must be nonnegative");
  if (!(output_dt > 0.0)) throw DomainError("evolver: output_dt must be positive");
  if (!(cfl_safety > 0.0)) throw DomainError("evolver: cfl_safety must be positive");
  if (dt > cfl_safety * g.dx() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "evolver: dt = " << dt << " exceeds the stability bound cfl_safety*dx = "
        << cfl_safety * g.dx();
    throw DomainError(msg.str());
  }
  if (!near_integer_ratio(output_dt, dt))
    throw DomainError("evolver: output_dt must be an integer multiple of dt");
  if (t_end > 0.0 && !near_integer_ratio(t_end, output_dt))
    throw DomainError("evolver: t_end must be an integer multiple of output_dt");
  if (form == EquationForm::boosted && sigma == 0.0)
    throw DomainError("evolver: boosted form requires a nonzero sigma");
}

Field rhs_nonlinear(const Field& u, EquationForm form, double sigma, DealiasRule dealias) {
  NonlinearEvaluator nl(u.grid, form, sigma, dealias);
  return Field(u.grid, fft_inverse(nl(fft_forward(u.values))));
}

Field step(const Field& u, double dt, EquationForm form, double sigma, DealiasRule dealias) {
  const double mean = mean_advection_of(u);
  NonlinearEvaluator nl(u.grid, form, sigma, dealias, mean);
  const SchemeCoefficients coeffs = scheme_coefficients(u.grid, dt, mean);
  return Field(u.grid, fft_inverse(etdrk4_step(fft_forward(u.values), coeffs, nl)));
}

Trajectory evolve(const Field& u0, const EvolverConfig& cfg,
                  const std::vector<Observer>& observers) {
  cfg.validate(u0.grid);
  if (!all_finite(u0)) throw EvolveError(0.0, "evolve: initial data contains NaN/Inf");

  const long long steps_per_output = std::llround(cfg.output_dt / cfg.dt);
  const long long n_outputs = std::llround(cfg.t_end / cfg.output_dt);

  const double mean = mean_advection_of(u0);
  NonlinearEvaluator nl(u0.grid, cfg.form, cfg.sigma, cfg.dealias, mean);
  const SchemeCoefficients coeffs = scheme_coefficients(u0.grid, cfg.dt, mean);

  Trajectory traj;
  Cvec u_hat = fft_forward(u0.values);
  long long step_index = 0;

  auto emit = [&](long long out_index) {
    const double t = out_index * cfg.output_dt;
    Field u(u0.grid, fft_inverse(u_hat));
    const double edge = std::max(std::abs(u.values[0]), std::abs(u.values[u.grid.n - 1]));
    if (edge > 1e-6) traj.boundary_leak = true;
    for (const auto& obs : observers) obs(t, u);
    traj.output_times.push_back(t);
    if (out_index == n_outputs) traj.final_field = std::move(u);
  };

  emit(0);
  for (long long out = 1; out <= n_outputs; ++out) {
    for (long long s = 0; s < steps_per_output; ++s) {
      u_hat = etdrk4_step(u_hat, coeffs, nl);
      ++step_index;
      if (!u_hat.allFinite()) {
        const double t = step_index * cfg.dt;
        std::ostringstream msg;
        msg << "evolve: NaN/Inf detected at t = " << t << " (step " << step_index << ")";
        throw EvolveError(t, msg.str());
      }
    }
    emit(out);
  }
  if (n_outputs == 0) traj.final_field = Field(u0.grid, fft_inverse(u_hat));
  traj.steps_taken = step_index;
  return traj;
}

void write_snapshot(const std::string& path, double t, const Field& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_snapshot: cannot open " + path);
  const std::int64_t n = u.grid.n;
  const double length = u.grid.length;
  out.write(reinterpret_cast<const char*>(&t), sizeof(t));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  for (int m = 0; m < u.grid.n; ++m) {
    const double re = u.values[m].real(), im = u.values[m].imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof(re));
    out.write(reinterpret_cast<const char*>(&im), sizeof(im));
  }
  if (!out) throw Error("write_snapshot: short write to " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_snapshot: cannot open " + path);
  double t = 0.0, length = 0.0;
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&t), sizeof(t));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || n <= 0) throw Error("read_snapshot: bad header in " + path);
  GridSpec g = make_grid(length, static_cast<int>(n));
  Eigen::VectorXcd v(g.n);
  for (int m = 0; m < g.n; ++m) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof(re));
    in.read(reinterpret_cast<char*>(&im), sizeof(im));
    v[m] = {re, im};
  }
  if (!in) throw Error("read_snapshot: truncated payload in " + path);
  return Snapshot{t, Field(g, std::move(v))};
}

}  // namespace dnls
