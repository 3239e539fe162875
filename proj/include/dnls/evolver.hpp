#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dnls/grid.hpp"

namespace dnls {

/// Gauge-equivalent right-hand sides.  chen_liu_lee is the default working
/// form u_t = i u_xx - |u|^2 u_x; kaup_newell is u_t = i u_xx - (|u|^2 u)_x;
/// boosted adds the frame-change potential -i sigma/2 |u|^2 u.
enum class EquationForm { chen_liu_lee, kaup_newell, boosted };

enum class DealiasRule { pad2x, none };

struct EvolverConfig {
  EquationForm form = EquationForm::chen_liu_lee;
  double sigma = 0.0;  // boosted frame speed, used only with EquationForm::boosted
  double dt = 0.0;
  double t_end = 0.0;
  double output_dt = 0.0;
  DealiasRule dealias = DealiasRule::pad2x;
  double cfl_safety = 0.1;

  /// Enforces dt <= cfl_safety * dx and output_dt, t_end falling on the
  /// step/output lattice.  Throws DomainError otherwise.
  void validate(const GridSpec& g) const;
};

/// Nonlinear part of u_t for the chosen form; cubic products are formed with
/// 2x zero padding (exact for cubic terms) unless dealiasing is disabled.
Field rhs_nonlinear(const Field& u, EquationForm form, double sigma = 0.0,
                    DealiasRule dealias = DealiasRule::pad2x);

/// One classical 4-stage integrating-factor Runge-Kutta step of size dt;
/// the linear phase exp(-i k^2 dt) is applied exactly in transform space.
Field step(const Field& u, double dt, EquationForm form, double sigma = 0.0,
           DealiasRule dealias = DealiasRule::pad2x);

using Observer = std::function<void(double t, const Field& u)>;

struct Trajectory {
  Field final_field;
  std::vector<double> output_times;
  bool boundary_leak = false;  // |u| at a box edge exceeded 1e-6 at some output
  long long steps_taken = 0;
};

/// Integrates u0 to t_end, invoking the observers at t = 0, output_dt,
/// 2*output_dt, ....  Aborts with EvolveError on NaN/Inf.
Trajectory evolve(const Field& u0, const EvolverConfig& cfg,
                  const std::vector<Observer>& observers = {});

/// Snapshot spill format: double t, int64 n, double length, then n
/// little-endian (re, im) double pairs.
void write_snapshot(const std::string& path, double t, const Field& u);
struct Snapshot {
  double t;
  Field field;
};
Snapshot read_snapshot(const std::string& path);

}  // namespace dnls
