#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpplab/coeff.hpp"
#include "kpplab/solver.hpp"

namespace kpplab {

/// Frame speed c(t) = (mu^2 + a(t))/mu.
double speed_integrand(const CoefficientPath& path, double mu, double t);
/// C(t) = (mu^2 t + integral of a over [0, t]) / mu.
double frame_shift(const CoefficientPath& path, double mu, double t);

/// Parameters of the exponential sub/supersolution family.
///
/// The lower curve uses B_b(t) = -B(t + t0) where B comes from build_B with
/// gamma = mu_tilde*mu and scale = 1 - delta, so that
/// b + B_b' - mu_tilde*mu >= delta*b away from block breakpoints.
struct WaveParams {
  double mu = 0.0;
  double mu_tilde = 0.0;
  double delta = 0.0;
  double d = 0.0;
  double d_b = 0.0;
  double a_inf = 0.0;  // least-mean estimate the invariants were checked against
  PiecewiseB B;
  double d_sufficient = 0.0;
};

/// Largest delta with (1 - delta) a_inf >= 1.05 mu_tilde mu.
double select_delta(double mu, double mu_tilde, double a_inf);

/// d_b = max{ e^{-k|B|} / (delta k), e^{k|B|} } with k = mu_tilde/mu - 1.
double lower_threshold(double mu, double mu_tilde, double delta, double B_norm);

/// (delta k)^{-k} e^{k|B|}: on the validity half-line this makes the
/// e^{-(2mu - mu_tilde) xi} term of the residual nonpositive for every B_b(t)
/// in [-|B|, |B|]. Equals at most d_b when |B| = 0 but can exceed it for large |B|.
double sufficient_threshold(double mu, double mu_tilde, double delta, double B_norm);

struct WaveOptions {
  double delta = 0.0;   // <= 0 selects select_delta
  double d = 0.0;       // <= 0 selects max{d_b, sufficient_threshold}
  double r_min = 10.0;  // window for the least-mean estimate and first block length
  TimeRange horizon{0.0, 400.0};
  double stride = 0.05;
};

/// Checks 0 < mu < mu_tilde < 2 mu, mu_tilde^2 <= a_inf, (1 - delta) a_inf > mu_tilde mu,
/// builds B and resolves d (an explicit d must be at least d_b). The square-root bound is not strict so the
/// threshold case mu_tilde = sqrt(a) of a constant path is admitted.
WaveParams make_wave_params(const CoefficientPath& path, double mu, double mu_tilde,
                            const WaveOptions& options = {});

enum class BoundKind { super, sub };

/// Immutable curve (t, x) -> value with an optional validity half-line x >= rho(t).
class BoundCurve {
 public:
  using Eval = std::function<double(double, double)>;
  using Boundary = std::function<double(double)>;

  BoundCurve(BoundKind kind, std::string name, Eval eval, Boundary rho = {});

  double operator()(double t, double x) const { return eval_(t, x); }
  /// Left end of the validity region; -inf when the curve is valid everywhere.
  double validity_start(double t) const;
  bool valid_at(double t, double x) const { return x >= validity_start(t); }
  BoundKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  BoundKind kind_;
  std::string name_;
  Eval eval_;
  Boundary rho_;
};

/// phi^mu = e^{-mu (x - C(t))}, an exact solution of the linearized equation.
BoundCurve linear_supersolution(const CoefficientPath& path, double mu);
/// min{1, phi^mu}.
BoundCurve supersolution(const CoefficientPath& path, double mu);

/// e^{-mu xi} - d e^{(mu_tilde/mu - 1) B_b(t) - mu_tilde xi}, xi = x - C(t), on
/// x >= rho(t) = C + ln d/(mu_tilde - mu) + B_b(t)/mu.
BoundCurve lower_solution(const CoefficientPath& path, const WaveParams& params,
                          double t0_shift = 0.0);

/// Peak location x_w(t) = C + (ln d + ln mu_tilde - ln mu)/(mu_tilde - mu) + B_b(t)/mu.
double lower_peak(const CoefficientPath& path, const WaveParams& params, double t,
                  double t0_shift = 0.0);

/// lower_solution for x >= x_w(t), held at its peak value to the left.
BoundCurve capped_lower(const CoefficientPath& path, const WaveParams& params,
                        double t0_shift = 0.0);

enum class Relation { below, above };  // u <= bound, u >= bound

struct Region {
  bool validity_only = true;
  double x_lo = -std::numeric_limits<double>::infinity();
  double x_hi = std::numeric_limits<double>::infinity();
};

struct CertifyRow {
  double t = 0.0;
  double max_violation = 0.0;  // signed; <= 0 means the ordering holds strictly
  double location = 0.0;
};

struct CertifyReport {
  std::string bound;
  Relation relation = Relation::below;
  std::vector<CertifyRow> rows;
  double max_violation = 0.0;
  double t_at_max = 0.0;
  double slack = 0.0;
  bool passed = false;
};

/// Signed ordering violation over stored frames, restricted to the region and
/// (optionally) the bound's validity region. The t = 0 frame must satisfy the
/// ordering to within 1e-9; otherwise the run is misconfigured.
CertifyReport certify_ordering(const Trajectory& traj, const BoundCurve& bound, Relation relation,
                               double slack, const Region& region = {});

/// "t,max_violation,location".
void write_csv(std::ostream& os, const CertifyReport& report);
/// Bound sampled on a grid: "t,x,value" rows, NaN outside validity.
void write_csv(std::ostream& os, const BoundCurve& curve, const Grid1D& grid,
               std::span<const double> times);

}  // namespace kpplab
