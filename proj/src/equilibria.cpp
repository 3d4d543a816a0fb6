#include "kpplab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "kpplab/error.hpp"

namespace kpplab {

double logistic_solution(double u0, const CoefficientPath& path, double t) {
  require(u0 >= 0.0, "logistic_solution: u0 must be nonnegative");
  if (u0 == 0.0) return 0.0;
  const double A = path.integral(0.0, t);
  return u0 / (u0 + (1.0 - u0) * std::exp(-A));
}

namespace {

/// Noise grid points strictly inside (a, b), bracketed by a and b.
std::vector<double> quadrature_nodes(const NoisePath& noise, double a, double b) {
  std::vector<double> nodes{a};
  const double t0 = noise.sample_time(0);
  const double h = noise.step();
  auto i = static_cast<std::size_t>(std::max(0.0, std::floor((a - t0) / h)));
  const std::size_t n = noise.samples().size();
  for (; i < n; ++i) {
    const double s = noise.sample_time(i);
    if (s >= b - 1e-12 * h) break;
    if (s > a + 1e-12 * h) nodes.push_back(s);
  }
  nodes.push_back(b);
  return nodes;
}

/// Scaled trapezoid recurrence for J(b) = int_a^b e^{G(r) - G(b)} dr with
/// G(r) = r + int xi, advanced node by node.
struct ScaledIntegral {
  double J = 0.0;

  void advance(double h, double dG) {
    const double q = std::exp(-dG);
    J = J * q + 0.5 * h * (q + 1.0);
  }
};

void check_history(const NoisePath& noise, double t_start) {
  if (t_start < noise.range().lo - 1e-9) {
    fail(ErrorCode::out_of_range, "insufficient noise history: need samples from t=" +
                                      format_number(t_start) + " but the path starts at " +
                                      format_number(noise.range().lo));
  }
}

double tail_bound(double xi_inf, double length) {
  const double g = 1.0 + xi_inf;
  return std::exp(-g * length) / g;
}

}  // namespace

double real_noise_ode_solution(double u0, const NoisePath& noise, double t) {
  require(u0 >= 0.0, "real_noise_ode_solution: u0 must be nonnegative");
  require(t >= 0.0, "real_noise_ode_solution: t must be nonnegative");
  if (u0 == 0.0) return 0.0;
  if (t == 0.0) return u0;
  const auto nodes = quadrature_nodes(noise, 0.0, t);
  ScaledIntegral acc;
  double E = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double h = nodes[k] - nodes[k - 1];
    const double dE = h + noise.integral(nodes[k - 1], nodes[k]);
    acc.advance(h, dE);
    E += dE;
  }
  return u0 / (std::exp(-E) + u0 * acc.J);
}

double default_truncation(const NoisePath& noise, double tol) {
  require(tol > 0.0 && tol < 1.0, "default_truncation: tol must lie in (0, 1)");
  const double g = 1.0 + noise.min_value();
  return (std::log(1.0 / tol) - std::log(g)) / g;
}

EquilibriumSample random_equilibrium(const NoisePath& noise, double t, double t_trunc) {
  if (t_trunc <= 0.0) t_trunc = default_truncation(noise);
  check_history(noise, t - t_trunc);
  const auto nodes = quadrature_nodes(noise, t - t_trunc, t);
  ScaledIntegral acc;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double h = nodes[k] - nodes[k - 1];
    acc.advance(h, h + noise.integral(nodes[k - 1], nodes[k]));
  }
  return {t, 1.0 / acc.J, t_trunc, tail_bound(noise.min_value(), t_trunc)};
}

std::vector<EquilibriumSample> equilibrium_samples(const NoisePath& noise, double t_begin,
                                                   double t_end, std::size_t stride,
                                                   double t_trunc) {
  require(stride >= 1, "equilibrium_samples: stride must be at least 1");
  require(t_end > t_begin, "equilibrium_samples: empty range");
  if (t_trunc <= 0.0) t_trunc = default_truncation(noise);
  check_history(noise, t_begin - t_trunc);
  const double h = noise.step();
  const double t0 = noise.sample_time(0);
  const auto samples = noise.samples();
  const std::size_t n = samples.size();
  const auto first = static_cast<std::size_t>(std::ceil((t_begin - t_trunc - t0) / h - 1e-9));
  const auto begin = static_cast<std::size_t>(std::ceil((t_begin - t0) / h - 1e-9));
  if (begin >= n || noise.sample_time(n - 1) < t_end - 1e-9) {
    fail(ErrorCode::out_of_range, "equilibrium_samples: noise does not cover t_end=" + format_number(t_end));
  }

  std::vector<EquilibriumSample> out;
  ScaledIntegral acc;
  const double xi_inf = noise.min_value();
  for (std::size_t i = first + 1; i < n; ++i) {
    acc.advance(h, h + 0.5 * h * (samples[i - 1] + samples[i]));
    if (i < begin || (i - begin) % stride != 0) continue;
    const double ti = noise.sample_time(i);
    const double length = ti - noise.sample_time(first);
    out.push_back({ti, 1.0 / acc.J, length, tail_bound(xi_inf, length)});
    if (ti >= t_end - 1e-9) break;
  }
  return out;
}

CoefficientPath equilibrium_path(const NoisePath& noise, TimeRange range, std::size_t stride,
                                 double t_trunc) {
  if (t_trunc <= 0.0) t_trunc = default_truncation(noise);
  const auto samples = equilibrium_samples(noise, range.lo, range.hi, stride, t_trunc);
  require(samples.size() >= 2, "equilibrium_path: range too short for the sampling stride");
  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& s : samples) values.push_back(s.Y);
  const NoiseParams& p = noise.params();
  ParamList params{{"seed", std::to_string(p.seed)},
                   {"kappa", format_number(p.kappa)},
                   {"sigma", format_number(p.sigma)},
                   {"xi_max", format_number(p.xi_max)},
                   {"noise_step", format_number(p.step)},
                   {"noise_offset", format_number(noise.offset())},
                   {"t_trunc", format_number(t_trunc)}};
  return CoefficientPath::tabulated(samples.front().t, static_cast<double>(stride) * noise.step(),
                                    std::move(values), PathKind::equilibrium, std::move(params));
}

double StabilityBound::operator()(const CoefficientPath& path, double t) const {
  return M * std::exp(-path.integral(0.0, t));
}

StabilityBound stability_bound(double u0_inf, double u0_sup) {
  require(u0_inf > 0.0, "stability_bound: inf u0 must be positive");
  require(u0_sup >= u0_inf, "stability_bound: need sup u0 >= inf u0");
  const double lower = std::abs(1.0 - 1.0 / std::min(1.0, u0_inf));
  const double upper = std::abs(1.0 - 1.0 / std::max(1.0, u0_sup));
  return {std::max(1.0, u0_sup) * std::max(lower, upper)};
}

SlackModel default_slack() { return {1.0, 0.75}; }

SlackModel calibrate_slack() {
  const double dt = 0.01;
  const auto path = CoefficientPath::constant(1.0, {0.0, 20.0});
  const Grid1D grid(0.0, 1.0, 5);
  SolveConfig cfg;
  cfg.dt = dt;
  cfg.store_stride = 1;
  cfg.margin = 0.0;
  double err = 0.0;
  for (double u0 : {0.5, 2.0}) {
    const auto traj = solve(make_initial(init::Constant{u0}, grid), path, 10.0, cfg);
    for (const Field& f : traj.frames) {
      const double exact = logistic_solution(u0, path, f.t);
      for (double v : f.u) err = std::max(err, std::abs(v - exact));
    }
  }
  SlackModel model = default_slack();
  model.c_time = 2.0 * err / dt;
  return model;
}

StabilityReport verify_stability_decay(const Trajectory& traj, const CoefficientPath& path,
                                       const StabilityBound& bound, double slack) {
  require(!traj.frames.empty(), "verify_stability_decay: empty trajectory");
  require(traj.frames.front().min() > 0.0,
          "verify_stability_decay: initial data must be bounded away from zero");
  StabilityReport rep;
  rep.slack = slack;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (const Field& f : traj.frames) {
    double dist = 0.0;
    for (double v : f.u) dist = std::max(dist, std::abs(v - 1.0));
    const double b = bound(path, f.t);
    const StabilityRow row{f.t, dist, b, dist - b};
    if (row.violation > rep.max_violation) {
      rep.max_violation = row.violation;
      rep.t_at_max = f.t;
    }
    rep.rows.push_back(row);
  }
  rep.passed = rep.max_violation <= slack;
  const double t_end = traj.frames.back().t;
  rep.plateau = path.integral(0.5 * t_end, t_end) < 1.0;
  return rep;
}

void write_csv(std::ostream& os, const StabilityReport& report) {
  os << "t,sup_dist,bound,violation\n";
  for (const auto& r : report.rows) {
    os << format_number(r.t) << ',' << format_number(r.sup_dist) << ',' << format_number(r.bound)
       << ',' << format_number(r.violation) << '\n';
  }
}

}  // namespace kpplab
