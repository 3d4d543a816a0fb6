#pragma once

#include <iosfwd>
#include <vector>

#include "kpplab/coeff.hpp"
#include "kpplab/noise.hpp"
#include "kpplab/solver.hpp"

namespace kpplab {

/// Spatially homogeneous solution of u' = a(t) u (1 - u) from u(0) = u0,
/// u(t) = u0 / (u0 + (1 - u0) exp(-A(t))) with A(t) the integral of a on [0, t].
double logistic_solution(double u0, const CoefficientPath& path, double t);

/// Solution of u' = (1 + xi(t)) u - u^2 from u(0) = u0, evaluated through
/// u(t) = u0 e^{E(t)} / (1 + u0 * int_0^t e^{E(s)} ds), E(s) = s + int_0^s xi,
/// with the outer integral by trapezoid on the noise grid (t >= 0).
double real_noise_ode_solution(double u0, const NoisePath& noise, double t);

struct EquilibriumSample {
  double t = 0.0;
  double Y = 0.0;
  double t_trunc = 0.0;
  /// Bound on the neglected tail e^{-(1+xi_inf) T}/(1 + xi_inf).
  double error_bound = 0.0;
};

/// Truncation length making the tail bound fall below tol, using the
/// realized minimum of the noise.
double default_truncation(const NoisePath& noise, double tol = 1e-8);

/// Y(theta_t omega) = 1 / int_{-inf}^0 e^{s + int_0^s xi(theta_{t+tau})dtau} ds,
/// truncated to s >= -t_trunc (t_trunc <= 0 selects default_truncation).
EquilibriumSample random_equilibrium(const NoisePath& noise, double t, double t_trunc = 0.0);

/// Y sampled on every noise grid point of [t_begin, t_end] with one linear
/// sweep; entry i sits at noise time index first + i*stride.
std::vector<EquilibriumSample> equilibrium_samples(const NoisePath& noise, double t_begin,
                                                   double t_end, std::size_t stride,
                                                   double t_trunc = 0.0);

struct StabilityBound {
  double M = 0.0;

  /// M * exp(-integral of a over [0, t]).
  double operator()(const CoefficientPath& path, double t) const;
};

/// M = max{1, sup u0} * max{|1 - 1/min{1, inf u0}|, |1 - 1/max{1, sup u0}|}.
StabilityBound stability_bound(double u0_inf, double u0_sup);

/// slack = c_space * dx^2 + c_time * dt, the allowance separating theorem
/// violations from discretization error in ordering checks.
struct SlackModel {
  double c_space = 1.0;
  double c_time = 0.5;

  double operator()(double dx, double dt) const { return c_space * dx * dx + c_time * dt; }
};

/// Frozen constants; calibrate_slack() reproduces c_time.
SlackModel default_slack();
/// Measures the homogeneous logistic error of the scheme (a = 1, u0 = 0.5 and
/// u0 = 2 on [0, 10]) and returns c_time = 2 * max error / dt.
SlackModel calibrate_slack();

struct StabilityRow {
  double t = 0.0;
  double sup_dist = 0.0;
  double bound = 0.0;
  double violation = 0.0;  // sup_dist - bound
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double max_violation = 0.0;
  double t_at_max = 0.0;
  double slack = 0.0;
  bool passed = false;
  /// True when the decay integral barely grows over the second half of the
  /// run, the regime where u = 1 is not asymptotically stable.
  bool plateau = false;
};

StabilityReport verify_stability_decay(const Trajectory& traj, const CoefficientPath& path,
                                       const StabilityBound& bound, double slack);

void write_csv(std::ostream& os, const StabilityReport& report);

}  // namespace kpplab
