#include "dnls/gauge.hpp"

#include <cmath>
#include <sstream>

namespace dnls {

namespace {

// Gates on the edge mass density |u|^2, the quantity whose tail the phase
// integral neglects.  Amplitude-level radiation from time stepping
// (~1e-10) stays transformable; any O(1) non-decaying field is rejected.
void require_edge_decay(const Field& u, const char* op) {
  const double edge_mass =
      std::max(std::norm(u.values[0]), std::norm(u.values[u.grid.n - 1]));
  if (edge_mass > kBoundaryTolerance) {
    std::ostringstream msg;
    msg << op << ": |u|^2 = " << edge_mass << " at a box edge exceeds the decay gate "
        << kBoundaryTolerance;
    throw BoundaryDecayError(msg.str());
  }
}

}  // namespace

Field gauge_transform(const Field& u, double beta) {
  require_edge_decay(u, "gauge_transform");
  const int n = u.grid.n;
  Eigen::ArrayXd mod_sq(n);
  for (int m = 0; m < n; ++m) mod_sq[m] = std::norm(u.values[m]);
  const CumulativeIntegral phase = cumulative_integral(mod_sq, u.grid);

  Eigen::VectorXcd v(n);
  for (int m = 0; m < n; ++m) {
    const double a = beta * phase.values[m];
    v[m] = u.values[m] * std::complex<double>(std::cos(a), std::sin(a));
  }
  return Field(u.grid, std::move(v));
}

Field scaling_transform(const Field& u, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("scaling_transform: lambda must be positive");
  GridSpec g{u.grid.length * lambda, u.grid.n, u.grid.x0_offset * lambda};
  // Node m of the new grid sits at lambda * x_m, so the samples carry over.
  return Field(g, (u.values / std::sqrt(lambda)).eval());
}

Field galilean_frame(const Field& u, double sigma, double x_ref, double t) {
  const double shift = x_ref + sigma * t;
  Field moved = translate(u, -shift);  // moved(x) = u(x + shift)
  require_edge_decay(moved, "galilean_frame");

  const Eigen::ArrayXd x = u.grid.nodes();
  Eigen::VectorXcd v(u.grid.n);
  for (int m = 0; m < u.grid.n; ++m) {
    const double a = -0.5 * sigma * (x[m] + 0.5 * sigma * t);
    v[m] = moved.values[m] * std::complex<double>(std::cos(a), std::sin(a));
  }
  return Field(u.grid, std::move(v));
}

}  // namespace dnls
