#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kpplab {

struct TimeRange {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
};

enum class PathKind { constant, periodic, section5, equilibrium, tabulated };

std::string_view to_string(PathKind kind);

/// Ordered key/value pairs recorded in serialized headers.
using ParamList = std::vector<std::pair<std::string, std::string>>;

namespace detail {
class PathProfile;
}

/// A positive growth rate t -> a(t).
///
/// Paths are immutable values: shifting shares the underlying profile and
/// only moves the time origin, so eval(shifted(s), t) == eval(t + s) with
/// the addition performed exactly once. Periodic paths reduce their phase
/// offset modulo the period, which makes a shift by one period the identity.
class CoefficientPath {
 public:
  static CoefficientPath constant(double a, TimeRange range);
  static CoefficientPath periodic(double mean, double amplitude, double period,
                                  TimeRange range);
  /// Explicit nonautonomous example with least mean 1 and greatest mean 2:
  /// plateaus of 1 and 2 on alternating blocks of growing length, joined by
  /// short piecewise-linear spikes. Even-symmetric in t.
  static CoefficientPath section5(TimeRange range);
  /// Linear interpolation through samples values[i] at t0 + i*step.
  static CoefficientPath tabulated(double t0, double step,
                                   std::vector<double> values,
                                   PathKind kind = PathKind::tabulated,
                                   ParamList params = {});

  double operator()(double t) const;
  /// Exact integral of the path over [s, t] (s may exceed t).
  double integral(double s, double t) const;
  /// Upper bound of a over [s, t]; attained for every kind.
  double max_over(double s, double t) const;

  CoefficientPath shifted(double s) const;

  TimeRange range() const { return range_; }
  PathKind kind() const;
  const ParamList& parameters() const;
  double offset() const { return offset_; }
  /// Native sample spacing; zero for formula-defined paths.
  double native_step() const;

 private:
  CoefficientPath(std::shared_ptr<const detail::PathProfile> profile,
                  TimeRange range, double offset);

  void check_in_range(double t) const;

  std::shared_ptr<const detail::PathProfile> profile_;
  TimeRange range_;
  double offset_ = 0.0;
};

inline CoefficientPath shift(const CoefficientPath& path, double s) {
  return path.shifted(s);
}

/// (1/(t-s)) * integral of the path over [s, t].
double windowed_mean(const CoefficientPath& path, double s, double t);

struct MeanEstimate {
  double r_min = 0.0;
  double stride = 0.0;
  TimeRange horizon;
  double a_inf = 0.0;  // least windowed mean
  double a_hat = 0.0;  // full-horizon mean
  double a_sup = 0.0;  // greatest windowed mean
};

/// Finite-horizon estimate of the least, average and greatest means.
///
/// a_inf / a_sup are the extreme means over windows [s, s + r_min] with s on
/// the stride grid of the horizon, widened if needed to contain the
/// full-horizon mean a_hat. Halving r_min (when it stays a multiple of the
/// stride) can only widen the estimate: every long window is the average of
/// two short ones.
MeanEstimate estimate_means(const CoefficientPath& path, double r_min,
                            double stride, TimeRange horizon);

/// estimate_means over a ladder of window lengths, reported in input order.
std::vector<MeanEstimate> mean_ladder(const CoefficientPath& path,
                                      std::span<const double> r_values,
                                      double stride, TimeRange horizon);

/// Bounded primitive from the block-mean construction:
/// B(t) = integral over [kT, t] of (scale*b - eps_k) on block k, where eps_k is
/// the block mean of scale*b. Then scale*b - B' = eps_k inside each block.
class PiecewiseB {
 public:
  PiecewiseB(CoefficientPath path, double scale, double block_length,
             std::int64_t first_block, std::vector<double> block_means);

  double operator()(double t) const;
  /// B'(t); undefined at breakpoints, where the right-hand block is used.
  double derivative(double t) const;

  double block_length() const { return block_length_; }
  double scale() const { return scale_; }
  std::int64_t first_block() const { return first_block_; }
  std::span<const double> block_means() const { return block_means_; }
  double min_block_mean() const;
  double sup_norm() const { return sup_norm_; }
  TimeRange coverage() const;
  bool is_breakpoint(double t, double tol = 1e-12) const;

 private:
  std::size_t block_index(double t) const;

  CoefficientPath path_;
  double scale_;
  double block_length_;
  std::int64_t first_block_;
  std::vector<double> block_means_;
  double sup_norm_ = 0.0;
};

/// Block search: T doubles from r_min up to horizon/4 and the first T whose
/// block means of scale*b all exceed gamma is used. Requires
/// gamma < scale * a_inf estimated at (r_min, stride, horizon).
PiecewiseB build_B(const CoefficientPath& path, double gamma, double scale,
                   double r_min, TimeRange horizon, double stride = 0.05);

/// Two-column CSV (t,value) with a leading "# kind=... key=value" line.
void write_csv(std::ostream& os, const CoefficientPath& path, double t0,
               double t1, double dt);

/// Fixed-width decimal rendering used by every text artifact
/// (12 significant digits, independent of the global locale).
std::string format_number(double v);

}  // namespace kpplab
