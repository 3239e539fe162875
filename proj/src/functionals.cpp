#include "dnls/functionals.hpp"

#include <cmath>
#include <sstream>

namespace dnls {

namespace {

double im_pairing(const Field& u, const Field& ux) {
  // Im int u conj(u_x) dx
  double s = 0.0;
  for (int m = 0; m < u.grid.n; ++m)
    s += std::imag(u.values[m] * std::conj(ux.values[m]));
  return u.grid.dx() * s;
}

double cubic_im_term(const Field& u, const Field& ux) {
  // Im int |u|^2 conj(u) u_x dx
  double s = 0.0;
  for (int m = 0; m < u.grid.n; ++m)
    s += std::imag(std::norm(u.values[m]) * std::conj(u.values[m]) * ux.values[m]);
  return u.grid.dx() * s;
}

// --- fixed Gauss-Legendre rule used for the smooth step ---

struct GaussLegendre {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};

const GaussLegendre& gl64() {
  static const GaussLegendre rule = [] {
    const int n = 64;
    GaussLegendre r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
          const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      r.nodes[i] = x;
      r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

double mollifier(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

double mollifier_integral(double a, double b) {
  const GaussLegendre& rule = gl64();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < rule.nodes.size(); ++i)
    s += rule.weights[i] * mollifier(mid + half * rule.nodes[i]);
  return half * s;
}

double mollifier_mass() {
  static const double z = mollifier_integral(-1.0, 1.0);
  return z;
}

}  // namespace

double energy(const Field& u) {
  const Field ux = derivative(u);
  return 0.5 * l2_norm_sq(ux) + 0.25 * cubic_im_term(u, ux);
}

double mass(const Field& u) { return 0.5 * l2_norm_sq(u); }

double momentum(const Field& u) { return 0.5 * im_pairing(u, derivative(u)); }

double action(const Field& u, double omega, double c) {
  return energy(u) + omega * mass(u) + c * momentum(u);
}

NehariValue nehari(const Field& u, double omega, double c) {
  const Field ux = derivative(u);
  const double l2 = l2_norm_sq(u);
  NehariValue out;
  out.direct = l2_norm_sq(ux) + cubic_im_term(u, ux) + omega * l2 + c * im_pairing(u, ux);

  const std::complex<double> i1(0.0, 1.0);
  double sq = 0.0, l4 = 0.0, l6 = 0.0;
  for (int m = 0; m < u.grid.n; ++m) {
    const double a2 = std::norm(u.values[m]);
    sq += std::norm(ux.values[m] - 0.5 * i1 * c * u.values[m] + 0.5 * i1 * a2 * u.values[m]);
    l4 += a2 * a2;
    l6 += a2 * a2 * a2;
  }
  const double h = u.grid.dx();
  out.sum_of_squares = h * sq + (omega - 0.25 * c * c) * l2 + 0.5 * c * h * l4 - 0.25 * h * l6;
  return out;
}

LquadValue lquad(const Field& u, double omega, double c) {
  const Field ux = derivative(u);
  const double l2 = l2_norm_sq(u);
  LquadValue out;
  out.direct = l2_norm_sq(ux) + omega * l2 + c * im_pairing(u, ux);
  const std::complex<double> i1(0.0, 1.0);
  double sq = 0.0;
  for (int m = 0; m < u.grid.n; ++m)
    sq += std::norm(ux.values[m] - 0.5 * i1 * c * u.values[m]);
  out.completed_square = u.grid.dx() * sq + (omega - 0.25 * c * c) * l2;
  return out;
}

double q_charge(const Field& u, double mu) { return mass(u) + mu * momentum(u); }

double smooth_step(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return mollifier_integral(-1.0, x) / mollifier_mass();
}

double smooth_step_dx(double x) { return mollifier(x) / mollifier_mass(); }

double smooth_step_dxx(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  const double q = 1.0 - x * x;
  return smooth_step_dx(x) * (-2.0 * x / (q * q));
}

double smooth_step_comparison_constant() {
  static const double c = [] {
    double worst = 0.0;
    const int samples = 4096;
    for (int i = 1; i < samples; ++i) {
      const double x = -1.0 + 2.0 * i / samples;
      const double p = smooth_step(x), p1 = smooth_step_dx(x), p2 = smooth_step_dxx(x);
      if (p > 1e-250) worst = std::max(worst, p1 * p1 / p);
      if (p1 > 1e-250) worst = std::max(worst, p2 * p2 / p1);
    }
    return worst;
  }();
  return c;
}

CutoffSpec make_cutoff_spec(const std::vector<double>& omega0, const std::vector<double>& c0,
                            const std::vector<double>& x_center0, double separation) {
  const std::size_t n = omega0.size();
  if (c0.size() != n || x_center0.size() != n || n == 0)
    throw DomainError("make_cutoff_spec: inconsistent parameter lists");
  CutoffSpec cut;
  cut.a = separation * separation / 64.0;
  cut.c_window = c0;
  cut.c_psi = smooth_step_comparison_constant();
  for (std::size_t j = 1; j < n; ++j) {
    if (!(c0[j] > c0[j - 1]))
      throw DomainError("make_cutoff_spec: speeds must be strictly increasing");
    cut.anchors.push_back(0.5 * (x_center0[j - 1] + x_center0[j]));
    cut.sigmas.push_back(2.0 * (omega0[j] - omega0[j - 1]) / (c0[j] - c0[j - 1]));
  }
  return cut;
}

namespace {

Eigen::ArrayXd sample_step(const GridSpec& g, double center, double width) {
  const Eigen::ArrayXd x = g.nodes();
  Eigen::ArrayXd out(g.n);
  for (int m = 0; m < g.n; ++m) out[m] = smooth_step((x[m] - center) / width);
  return out;
}

}  // namespace

WeightSet build_weights(const CutoffSpec& cut, double t, const GridSpec& g) {
  if (!(t >= 0.0)) throw DomainError("build_weights: t must be nonnegative");
  const int n_waves = static_cast<int>(cut.anchors.size()) + 1;
  const double width = std::sqrt(t + cut.a);

  WeightSet w;
  w.psi.reserve(n_waves);
  w.psi.push_back(Eigen::ArrayXd::Ones(g.n));
  for (int j = 2; j <= n_waves; ++j)
    w.psi.push_back(sample_step(g, cut.anchors[j - 2] + cut.sigmas[j - 2] * t, width));
  w.chi.reserve(n_waves);
  for (int j = 0; j < n_waves; ++j) {
    if (j + 1 < n_waves)
      w.chi.push_back(w.psi[j] - w.psi[j + 1]);
    else
      w.chi.push_back(w.psi[j]);
  }
  return w;
}

double localized_mass_momentum(const Field& u, const WeightSet& w,
                               const std::vector<double>& omega0,
                               const std::vector<double>& c0) {
  const int n_waves = w.count();
  if (static_cast<int>(omega0.size()) != n_waves || static_cast<int>(c0.size()) != n_waves)
    throw DomainError("localized_mass_momentum: weight lists do not match the soliton count");
  const Field ux = derivative(u);
  Eigen::ArrayXd mass_density(u.grid.n), mom_density(u.grid.n);
  for (int m = 0; m < u.grid.n; ++m) {
    mass_density[m] = std::norm(u.values[m]);
    mom_density[m] = std::imag(u.values[m] * std::conj(ux.values[m]));
  }
  double total = 0.0;
  for (int j = 0; j < n_waves; ++j)
    total += omega0[j] * (mass_density * w.chi[j]).sum() + c0[j] * (mom_density * w.chi[j]).sum();
  return 0.5 * u.grid.dx() * total;
}

double halfline_mass_momentum(const Field& u, const CutoffSpec& cut, int j, double t,
                              std::optional<double> tau) {
  const int n_waves = static_cast<int>(cut.anchors.size()) + 1;
  if (j < 2 || j > n_waves)
    throw DomainError("halfline_mass_momentum: index j must be in 2..N");
  double speed = cut.sigmas[j - 2];
  if (tau) {
    if (cut.c_window.size() != static_cast<std::size_t>(n_waves))
      throw DomainError("halfline_mass_momentum: tau override needs the initial speed window");
    if (!(cut.c_window[j - 2] < *tau && *tau < cut.c_window[j - 1])) {
      std::ostringstream msg;
      msg << "tau = " << *tau << " outside the admissible window (" << cut.c_window[j - 2]
          << ", " << cut.c_window[j - 1] << ")";
      throw DomainError(msg.str());
    }
    speed = *tau;
  }
  const double width = std::sqrt(t + cut.a);
  const Eigen::ArrayXd psi = sample_step(u.grid, cut.anchors[j - 2] + speed * t, width);

  const Field ux = derivative(u);
  double s = 0.0;
  for (int m = 0; m < u.grid.n; ++m)
    s += (0.5 * speed * std::norm(u.values[m]) +
          std::imag(u.values[m] * std::conj(ux.values[m]))) *
         psi[m];
  return 0.5 * u.grid.dx() * s;
}

double action_hessian_form(const Field& eps, const std::vector<Field>& profiles,
                           const std::vector<double>& omega_t, const std::vector<double>& c_t,
                           const WeightSet& w) {
  const int n_waves = w.count();
  if (static_cast<int>(profiles.size()) != n_waves ||
      static_cast<int>(omega_t.size()) != n_waves || static_cast<int>(c_t.size()) != n_waves)
    throw DomainError("action_hessian_form: inconsistent profile/parameter counts");

  const Field ex = derivative(eps);
  const double h = eps.grid.dx();
  double total = l2_norm_sq(ex);

  Eigen::ArrayXd mass_density(eps.grid.n), mom_density(eps.grid.n);
  for (int m = 0; m < eps.grid.n; ++m) {
    mass_density[m] = std::norm(eps.values[m]);
    mom_density[m] = std::imag(eps.values[m] * std::conj(ex.values[m]));
  }

  for (int j = 0; j < n_waves; ++j) {
    require_same_grid(eps, profiles[j]);
    const Field rx = derivative(profiles[j]);
    double cross = 0.0;
    for (int m = 0; m < eps.grid.n; ++m) {
      const std::complex<double> r = profiles[j].values[m];
      const std::complex<double> rp = rx.values[m];
      const std::complex<double> e = eps.values[m];
      cross += std::imag(std::norm(r) * std::conj(e) * ex.values[m] +
                         r * rp * std::conj(e) * std::conj(e) +
                         std::conj(r) * rp * std::norm(e));
    }
    total += h * cross;
    total += omega_t[j] * h * (mass_density * w.chi[j]).sum() +
             c_t[j] * h * (mom_density * w.chi[j]).sum();
  }
  return total;
}

}  // namespace dnls
