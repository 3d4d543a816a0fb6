#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpplab/coeff.hpp"
#include "kpplab/solver.hpp"

namespace kpplab {

/// Rightmost down-crossing of `level`: the largest i with u_i >= level > u_{i+1},
/// located by linear interpolation. nullopt when the level is never crossed.
std::optional<double> front_position(const Field& field, double level);

struct FrontTrace {
  std::vector<double> levels;
  std::vector<double> times;
  /// positions[l][k]: crossing of levels[l] in frame k (nullopt = gap).
  std::vector<std::vector<std::optional<double>>> positions;
  std::string provenance;
};

FrontTrace track(const Trajectory& traj, std::span<const double> levels,
                 std::string provenance = {});
/// Levels 1/2 and 1/4.
FrontTrace track(const Trajectory& traj, std::string provenance = {});

/// "t,x_half,x_quarter" (one column per level); gaps are empty cells.
void write_csv(std::ostream& os, const FrontTrace& trace);

struct SpeedEstimate {
  double speed = 0.0;
  double std_error = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  double residual_norm = 0.0;  // RMS of the least-squares residuals
  double endpoint_ratio = 0.0; // x(t_end)/t_end
  std::size_t samples = 0;
};

/// Least-squares slope of x(t) on [t_a, t_b] for trace level `level_index`.
/// Front errors bounded by E move the slope by at most about 3E/(t_b - t_a).
SpeedEstimate estimate_speed(const FrontTrace& trace, double t_a, double t_b,
                             std::size_t level_index = 0);
/// Fit window [t0 + burn_in*(t_end - t0), t_end].
SpeedEstimate estimate_speed(const FrontTrace& trace, double burn_in = 0.25,
                             std::size_t level_index = 0);

enum class InitialClass { compact, front_like };
enum class Decision { spread, vanish, undecided };

struct ProbeSetup {
  Grid1D grid;
  InitialData initial;
  InitialClass initial_class = InitialClass::compact;
  SolveConfig config;
  double t_probe = 80.0;
  double eps_spread = 0.9;
  double eps_vanish = 0.05;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct SpeedInterval {
  double c_lo = 0.0;
  double c_hi = 0.0;
  bool has_lo = false;
  bool has_hi = false;
  bool monotone = true;
  std::vector<double> c_grid;
  std::vector<double> shifts;
  /// decisions[i * shifts.size() + j] for c_grid[i] and shifts[j].
  std::vector<Decision> decisions;
  /// Aggregate over shifts: spread (all spread), vanish (all vanish) or undecided.
  std::vector<Decision> per_speed;
};

/// Finite-shift, finite-horizon classification of ray speeds. One solve per
/// shift is run concurrently; every speed is classified from the frame at
/// t_probe. c_lo is the top of the contiguous run of spread speeds from the
/// bottom of the grid, c_hi the bottom of the contiguous run of vanish speeds
/// from the top, so non-monotone grids widen the interval.
SpeedInterval probe_speed_interval(const CoefficientPath& path, const ProbeSetup& setup,
                                   std::span<const double> c_grid,
                                   std::span<const double> shifts);

std::string_view to_string(Decision d);
std::string to_json(const SpeedInterval& interval);

/// Shifts spread evenly over [0, span) (count values).
std::vector<double> default_shift_set(double span, std::size_t count = 8);

struct SubadditivitySetup {
  Grid1D grid;
  SolveConfig config;
  double level = 0.5;
  double t_min = 2.0;
  unsigned threads = 0;
};

struct SubadditivityReport {
  std::vector<double> times;
  /// defects[i * times.size() + j] = x(t_i) + x(t_j, shifted by t_i) - x(t_i + t_j).
  std::vector<double> defects;
  double M_hat = 0.0;
  double arg_t = 0.0;
  double arg_s = 0.0;
};

/// Heaviside fronts on the path and on the path shifted by each t in times.
SubadditivityReport subadditivity_check(const CoefficientPath& path,
                                        std::span<const double> times,
                                        const SubadditivitySetup& setup);

struct SubadditivityStability {
  SubadditivityReport base;
  SubadditivityReport refined;  // times plus all midpoints
  double relative_change = 0.0;
  bool flagged = false;  // relative_change > 0.2
};

SubadditivityStability subadditivity_stability(const CoefficientPath& path,
                                               std::span<const double> times,
                                               const SubadditivitySetup& setup);

enum class Verdict { confirmed, inconclusive, violated };
std::string_view to_string(Verdict v);

struct TakeoverCheck {
  double t = 0.0;
  double outer_sup = 0.0;      // sup of u on x >= (c_hat + h) t
  double inner_deficit = 0.0;  // 1 - inf of u on x <= (c_hat - h) t
  bool ok = false;
};

struct TakeoverReport {
  double c_hat = 0.0;
  double h = 0.0;
  double eps_outer = 1e-3;
  double eps_inner = 1e-2;
  std::vector<TakeoverCheck> checks;
  Verdict verdict = Verdict::inconclusive;
};

/// Checks the outer and inner take-over regions with c_hat = 2 sqrt(a_hat).
/// When h >= c_hat the inner region is the single point x = 0.
TakeoverReport takeover_verify(const Trajectory& traj, const MeanEstimate& means, double h,
                               std::span<const double> t_checks, double eps_outer = 1e-3,
                               double eps_inner = 1e-2);

struct OrderingCheck {
  double t = 0.0;
  double x_first = 0.0;
  double x_second = 0.0;
  double violation = 0.0;
};

struct ProfileOrderingReport {
  std::vector<OrderingCheck> checks;
  double max_violation = 0.0;
};

/// Centres both profiles at their level-1/2 crossings and measures how far the
/// first (Heaviside-started) profile falls below the second on the left or
/// rises above it on the right, ignoring offsets within `exclusion` of the
/// crossing (default 2 dx).
ProfileOrderingReport profile_ordering_check(const Trajectory& heaviside,
                                             const Trajectory& phi_plus,
                                             std::span<const double> times,
                                             double exclusion = -1.0);

struct TailReport {
  std::vector<double> probes;
  std::vector<double> deviations;
  bool monotone = true;  // deviation non-increasing as the probe moves left
};

/// sup over stored t in [t_a, t_b] and x <= x_probe of |v(t, x) - 1|.
/// Throws ErrorCode::no_front when the first frame in the window lies below 1/2.
double tail_deviation(const Trajectory& moving, double x_probe, double t_a, double t_b);

TailReport tail_uniformity(const Trajectory& moving, std::span<const double> x_probes,
                           double t_a, double t_b);

}  // namespace kpplab
