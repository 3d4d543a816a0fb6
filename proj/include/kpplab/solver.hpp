#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kpplab/coeff.hpp"

namespace kpplab {

/// Uniform node-centred grid on [x_lo, x_hi] with n nodes.
struct Grid1D {
  double x_lo = 0.0;
  double x_hi = 1.0;
  std::size_t n = 3;

  Grid1D() = default;
  Grid1D(double lo, double hi, std::size_t nodes);
  /// Grid with spacing dx; x_hi is rounded to the nearest node.
  static Grid1D with_spacing(double lo, double hi, double dx);

  double dx() const { return (x_hi - x_lo) / static_cast<double>(n - 1); }
  double x(std::size_t i) const { return x_lo + static_cast<double>(i) * dx(); }
  /// Fractional node index of position x.
  double index_of(double x) const { return (x - x_lo) / dx(); }
};

struct Field {
  Grid1D grid;
  std::vector<double> u;
  double t = 0.0;

  double min() const;
  double max() const;
  /// Linear interpolation at x, clamped to the grid.
  double at(double x) const;
};

namespace init {
/// Step 1 -> 0 at x0, regularized as a linear ramp over the single cell
/// [x0 - dx/2, x0 + dx/2].
struct Heaviside {
  double x0 = 0.0;
};
/// plateau for x <= x0, linear decay to zero over `width`, zero beyond.
struct FrontLike {
  double x0 = 0.0;
  double width = 1.0;
  double plateau = 1.0;
};
/// height * (1 - ((x - center)/half_width)^2) on the support, zero outside.
struct CompactBump {
  double center = 0.0;
  double half_width = 1.0;
  double height = 1.0;
};
struct Constant {
  double value = 1.0;
};
/// min{1, exp(-mu (x - x0))}.
struct CappedExponential {
  double mu = 1.0;
  double x0 = 0.0;
};
/// mid + amp * cos(2 pi x / wavelength); inf = mid - amp, sup = mid + amp.
struct Oscillating {
  double mid = 1.25;
  double amp = 0.75;
  double wavelength = 20.0;
};
struct Samples {
  std::vector<double> values;
};
}  // namespace init

using InitialData = std::variant<init::Heaviside, init::FrontLike, init::CompactBump,
                                 init::Constant, init::CappedExponential, init::Oscillating,
                                 init::Samples>;

Field make_initial(const InitialData& data, const Grid1D& grid);

enum class FrameKind { fixed, moving };

struct SolveConfig {
  double dt = 0.005;
  FrameKind frame = FrameKind::fixed;
  double mu = 1.0;  // frame exponent; frame speed c(t) = (mu^2 + a(t))/mu
  std::size_t store_stride = 200;  // store every k-th step (plus first and last)
  double margin = 50.0;            // front-safety margin at each end; 0 disables
  double margin_tol = 1e-6;        // allowed variation inside a margin zone
  bool substep = true;  // split steps that would break the monotone bounds
};

struct Trajectory {
  Grid1D grid;
  FrameKind frame = FrameKind::fixed;
  double mu = 0.0;
  std::vector<Field> frames;

  /// Stored frame whose time is within tol of t.
  const Field& frame_at(double t, double tol = 1e-9) const;
  std::vector<double> times() const;
};

/// Largest dt keeping the explicit reaction map monotone for rates up to
/// a_max and data up to u_max.
double max_reaction_step(double a_max, double u_max);

/// One step of the splitting scheme from field.t to field.t + dt:
/// explicit reaction with the exact step integral of a, first-order upwind
/// advection in the moving frame, then backward-Euler diffusion with
/// zero-flux ends. Throws ErrorCode::stability_violation if dt breaks
/// dt*a_max*max(1, 2u_max - 1) <= 1/2 or the upwind CFL bound.
Field step(const Field& field, const CoefficientPath& path, double dt, const SolveConfig& config);

Trajectory solve(const Field& initial, const CoefficientPath& path, double t_end,
                 const SolveConfig& config);

Trajectory solve_moving_frame(const Field& initial, const CoefficientPath& path, double mu,
                              double t_end, SolveConfig config);

/// Recommended right end so that a front with speed up to 2*sqrt(a_sup)
/// stays clear of the margin until t_end.
double recommend_x_hi(double t_end, double a_sup_est, double margin);

void write_csv(std::ostream& os, const Trajectory& traj);
/// "KPP1" then little-endian f64: x_lo, x_hi, n, frame_count, then per frame
/// t followed by n values.
void write_binary(std::ostream& os, const Trajectory& traj);
Trajectory read_binary(std::istream& is);

}  // namespace kpplab
