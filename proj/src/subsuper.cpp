#include "kpplab/subsuper.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kpplab/error.hpp"

namespace kpplab {

double speed_integrand(const CoefficientPath& path, double mu, double t) {
  require(mu > 0.0, "speed_integrand: mu must be positive");
  return (mu * mu + path(t)) / mu;
}

double frame_shift(const CoefficientPath& path, double mu, double t) {
  require(mu > 0.0, "frame_shift: mu must be positive");
  return (mu * mu * t + path.integral(0.0, t)) / mu;
}

double select_delta(double mu, double mu_tilde, double a_inf) {
  require(mu > 0.0 && mu_tilde > 0.0 && a_inf > 0.0, "select_delta: rates must be positive");
  const double delta = 1.0 - 1.05 * mu_tilde * mu / a_inf;
  require(delta > 0.0, "select_delta: mu_tilde*mu is too close to a_inf for any delta");
  return delta;
}

double lower_threshold(double mu, double mu_tilde, double delta, double B_norm) {
  require(mu > 0.0 && mu_tilde > mu, "lower_threshold: need 0 < mu < mu_tilde");
  require(delta > 0.0 && delta < 1.0, "lower_threshold: delta must lie in (0, 1)");
  require(B_norm >= 0.0 && std::isfinite(B_norm), "lower_threshold: |B| must be finite");
  const double k = mu_tilde / mu - 1.0;
  return std::max(std::exp(-k * B_norm) / (delta * k), std::exp(k * B_norm));
}

double sufficient_threshold(double mu, double mu_tilde, double delta, double B_norm) {
  lower_threshold(mu, mu_tilde, delta, B_norm);  // same argument checks
  const double k = mu_tilde / mu - 1.0;
  return std::pow(delta * k, -k) * std::exp(k * B_norm);
}

WaveParams make_wave_params(const CoefficientPath& path, double mu, double mu_tilde,
                            const WaveOptions& options) {
  require(mu > 0.0 && mu < mu_tilde && mu_tilde < 2.0 * mu,
          "wave parameters: need 0 < mu < mu_tilde < 2 mu");
  const MeanEstimate est =
      estimate_means(path, options.r_min, std::min(options.stride, options.r_min), options.horizon);
  require(mu_tilde * mu_tilde <= est.a_inf * (1.0 + 1e-12),
          "wave parameters: mu_tilde exceeds sqrt of the least mean " + format_number(est.a_inf));
  const double delta = options.delta > 0.0 ? options.delta : select_delta(mu, mu_tilde, est.a_inf);
  require(delta < 1.0, "wave parameters: delta must lie in (0, 1)");
  require((1.0 - delta) * est.a_inf > mu_tilde * mu,
          "wave parameters: (1 - delta) a_inf must exceed mu_tilde*mu");
  PiecewiseB B = build_B(path, mu_tilde * mu, 1.0 - delta, options.r_min, options.horizon,
                         options.stride);
  const double d_b = lower_threshold(mu, mu_tilde, delta, B.sup_norm());
  const double d_suff = sufficient_threshold(mu, mu_tilde, delta, B.sup_norm());
  double d = std::max(d_b, d_suff);
  if (options.d > 0.0) {
    require(options.d >= d_b, "wave parameters: d=" + format_number(options.d) +
                                  " is below the threshold d_b=" + format_number(d_b));
    d = options.d;
  }
  return WaveParams{mu, mu_tilde, delta, d, d_b, est.a_inf, std::move(B), d_suff};
}

BoundCurve::BoundCurve(BoundKind kind, std::string name, Eval eval, Boundary rho)
    : kind_(kind), name_(std::move(name)), eval_(std::move(eval)), rho_(std::move(rho)) {}

double BoundCurve::validity_start(double t) const {
  return rho_ ? rho_(t) : -std::numeric_limits<double>::infinity();
}

BoundCurve linear_supersolution(const CoefficientPath& path, double mu) {
  require(mu > 0.0, "supersolution: mu must be positive");
  return BoundCurve(BoundKind::super, "phi",
                    [path, mu](double t, double x) { return std::exp(-mu * (x - frame_shift(path, mu, t))); });
}

BoundCurve supersolution(const CoefficientPath& path, double mu) {
  require(mu > 0.0, "supersolution: mu must be positive");
  return BoundCurve(BoundKind::super, "phi_plus", [path, mu](double t, double x) {
    const double xi = x - frame_shift(path, mu, t);
    return xi <= 0.0 ? 1.0 : std::exp(-mu * xi);
  });
}

namespace {

/// Shared evaluation state of the lower family.
struct LowerFamily {
  CoefficientPath path;
  double mu, mu_tilde, d, k, t0;
  PiecewiseB B;

  double B_b(double t) const { return -B(t + t0); }
  double C(double t) const { return frame_shift(path, mu, t); }
  double rho(double t) const { return C(t) + std::log(d) / (mu_tilde - mu) + B_b(t) / mu; }
  double peak(double t) const {
    return C(t) + (std::log(d) + std::log(mu_tilde) - std::log(mu)) / (mu_tilde - mu) + B_b(t) / mu;
  }
  double value(double t, double x) const {
    const double xi = x - C(t);
    return std::exp(-mu * xi) - d * std::exp(k * B_b(t) - mu_tilde * xi);
  }
};

std::shared_ptr<const LowerFamily> lower_family(const CoefficientPath& path, const WaveParams& p,
                                                double t0_shift) {
  require(p.mu > 0.0 && p.mu < p.mu_tilde && p.mu_tilde < 2.0 * p.mu,
          "lower solution: need 0 < mu < mu_tilde < 2 mu");
  require(p.d >= p.d_b * (1.0 - 1e-12), "lower solution: d below d_b");
  return std::make_shared<const LowerFamily>(
      LowerFamily{path.shifted(t0_shift), p.mu, p.mu_tilde, p.d, p.mu_tilde / p.mu - 1.0, t0_shift, p.B});
}

}  // namespace

BoundCurve lower_solution(const CoefficientPath& path, const WaveParams& params, double t0_shift) {
  auto fam = lower_family(path, params, t0_shift);
  return BoundCurve(
      BoundKind::sub, "phi_mu_d_B", [fam](double t, double x) { return fam->value(t, x); },
      [fam](double t) { return fam->rho(t); });
}

double lower_peak(const CoefficientPath& path, const WaveParams& params, double t, double t0_shift) {
  return lower_family(path, params, t0_shift)->peak(t);
}

BoundCurve capped_lower(const CoefficientPath& path, const WaveParams& params, double t0_shift) {
  auto fam = lower_family(path, params, t0_shift);
  return BoundCurve(BoundKind::sub, "phi_minus", [fam](double t, double x) {
    return fam->value(t, std::max(x, fam->peak(t)));
  });
}

CertifyReport certify_ordering(const Trajectory& traj, const BoundCurve& bound, Relation relation,
                               double slack, const Region& region) {
  require(!traj.frames.empty(), "certify_ordering: empty trajectory");
  require(traj.frame == FrameKind::fixed, "certify_ordering: trajectory must be in the fixed frame");
  CertifyReport rep;
  rep.bound = bound.name();
  rep.relation = relation;
  rep.slack = slack;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  const Grid1D& g = traj.grid;
  for (const Field& f : traj.frames) {
    CertifyRow row{f.t, -std::numeric_limits<double>::infinity(), 0.0};
    const double start = region.validity_only ? bound.validity_start(f.t) : -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      if (x < region.x_lo || x > region.x_hi || x < start) continue;
      const double b = bound(f.t, x);
      const double v = relation == Relation::below ? f.u[i] - b : b - f.u[i];
      if (v > row.max_violation) {
        row.max_violation = v;
        row.location = x;
      }
    }
    if (!std::isfinite(row.max_violation)) continue;  // region empty at this time
    if (f.t == traj.frames.front().t && row.max_violation > 1e-9) {
      fail(ErrorCode::invalid_argument,
           "certify_ordering: initial data violates the claimed ordering at x=" +
               format_number(row.location) + " by " + format_number(row.max_violation));
    }
    if (row.max_violation > rep.max_violation) {
      rep.max_violation = row.max_violation;
      rep.t_at_max = row.t;
    }
    rep.rows.push_back(row);
  }
  require(!rep.rows.empty(), "certify_ordering: region is empty at every stored time");
  rep.passed = rep.max_violation <= slack;
  return rep;
}

void write_csv(std::ostream& os, const CertifyReport& report) {
  os << "t,max_violation,location\n";
  for (const auto& r : report.rows) {
    os << format_number(r.t) << ',' << format_number(r.max_violation) << ','
       << format_number(r.location) << '\n';
  }
}

void write_csv(std::ostream& os, const BoundCurve& curve, const Grid1D& grid,
               std::span<const double> times) {
  os << "t,x,value\n";
  for (double t : times) {
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double x = grid.x(i);
      os << format_number(t) << ',' << format_number(x) << ',';
      if (curve.valid_at(t, x)) {
        os << format_number(curve(t, x));
      } else {
        os << "nan";
      }
      os << '\n';
    }
  }
}

}  // namespace kpplab
