#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "kpplab/equilibria.hpp"
#include "kpplab/error.hpp"
#include "kpplab/subsuper.hpp"

using namespace kpplab;

namespace {

constexpr double kTwoPi = 6.283185307179586;

WaveParams manual_params(double mu, double mu_tilde, double delta) {
  const auto one = CoefficientPath::constant(1.0, {0, 1000});
  PiecewiseB B = build_B(one, 0.5, 1.0, 10.0, {0, 400});
  const double d_b = lower_threshold(mu, mu_tilde, delta, 0.0);
  return WaveParams{mu, mu_tilde, delta, d_b, d_b, 1.0, std::move(B)};
}

}  // namespace

TEST_CASE("frame speed") {
  const auto one = CoefficientPath::constant(1.0, {0, 100});
  CHECK(speed_integrand(one, 1.0, 3.0) == 2.0);
  CHECK(frame_shift(one, 1.0, 3.0) == doctest::Approx(6.0));
  CHECK(speed_integrand(one, 2.0, 0.0) == 2.5);
  const auto four = CoefficientPath::constant(4.0, {0, 100});
  const double c_star = speed_integrand(four, 2.0, 0.0);
  CHECK(c_star == doctest::Approx(4.0));
  for (double mu = 0.2; mu < 6.0; mu += 0.01) CHECK(speed_integrand(four, mu, 0.0) >= c_star - 1e-12);
  CHECK_THROWS_AS(frame_shift(one, 0.0, 1.0), Error);
}

TEST_CASE("supersolution") {
  const auto one = CoefficientPath::constant(1.0, {0, 100});
  const auto phi = supersolution(one, 1.0);
  CHECK(phi(3.0, 8.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(phi(3.0, 6.0) == 1.0);
  CHECK(phi(3.0, 2.0) == 1.0);
  CHECK(phi.validity_start(3.0) == -std::numeric_limits<double>::infinity());
  CHECK(phi.name() == "phi_plus");

  // phi = e^{-mu x + mu^2 t + int a}: the ratios below make phi_t - phi_xx - a phi vanish identically.
  const auto per = CoefficientPath::periodic(1.0, 0.5, kTwoPi, {0, 100});
  const double mu = 0.8, h = 1e-3;
  const auto lin = linear_supersolution(per, mu);
  for (double t : {0.5, 3.1, 7.7}) {
    for (double x : {-2.0, 5.0, 20.0}) {
      const double p = lin(t, x);
      CHECK(lin(t, x + h) / p == doctest::Approx(std::exp(-mu * h)).epsilon(1e-10));
      CHECK(lin(t + h, x) / p == doctest::Approx(std::exp(mu * mu * h + per.integral(t, t + h))).epsilon(1e-10));
    }
  }
}

TEST_CASE("lower threshold") {
  CHECK(lower_threshold(1.0, 1.5, 0.5, 0.0) == doctest::Approx(4.0));
  CHECK(lower_threshold(1.0, 3.0, 0.5, 0.0) == doctest::Approx(1.0));
  const double k = 0.2;
  const double expect = std::max(std::exp(-k * 0.5) / (0.9 * k), std::exp(k * 0.5));
  CHECK(lower_threshold(1.0, 1.2, 0.9, 0.5) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(5.0268).epsilon(1e-4));
  double prev = 1e300;
  for (double delta = 0.05; delta < 1.0; delta += 0.05) {
    const double d = lower_threshold(1.0, 1.5, delta, 0.3);
    CHECK(d <= prev);
    prev = d;
  }
  // Not monotone in |B|: the first branch decays until e^{k|B|} takes over.
  const double kk = 0.5, cross = std::log(1.0 / (0.5 * kk)) / (2.0 * kk);
  CHECK(lower_threshold(1.0, 1.5, 0.5, 0.5) < lower_threshold(1.0, 1.5, 0.5, 0.0));
  prev = 0.0;
  for (double b = cross; b < 20.0; b += 0.5) {
    const double d = lower_threshold(1.0, 1.5, 0.5, b);
    CHECK(d == doctest::Approx(std::exp(kk * b)).epsilon(1e-14));
    CHECK(d >= prev);
    prev = d;
  }
  CHECK_THROWS_AS(lower_threshold(1.0, 0.9, 0.5, 0.0), Error);
  CHECK_THROWS_AS(lower_threshold(1.0, 1.5, 1.0, 0.0), Error);
}

TEST_CASE("sufficient threshold") {
  // On xi >= rho the term d delta k e^{k B_b} - e^{-(2 mu - mu_tilde) xi} must be nonnegative
  // for every B_b in [-|B|, |B|]. Its minimum over xi sits at rho.
  const double mu = 1.0, mt = 1.5, k = mt / mu - 1.0, delta = 0.5;
  auto worst = [&](double d, double norm) {
    double w = 1e300;
    for (double Bb = -norm; Bb <= norm + 1e-12; Bb += norm / 8.0 + 1e-3) {
      const double rho = std::log(d) / (mt - mu) + Bb / mu;
      w = std::min(w, d * delta * k * std::exp(k * Bb) - std::exp(-(2 * mu - mt) * rho));
    }
    return w;
  };
  for (double norm : {0.0, 0.5, 2.0, 6.0}) {
    const double ds = sufficient_threshold(mu, mt, delta, norm);
    CHECK(ds == doctest::Approx(std::pow(delta * k, -k) * std::exp(k * norm)).epsilon(1e-14));
    CHECK(worst(ds, norm) >= -1e-12);
  }
  CHECK(sufficient_threshold(mu, mt, delta, 0.0) <= lower_threshold(mu, mt, delta, 0.0));
  // With large |B| the threshold alone does not control this term.
  CHECK(worst(lower_threshold(mu, mt, delta, 6.0), 6.0) < 0.0);
  CHECK(sufficient_threshold(mu, mt, delta, 6.0) > lower_threshold(mu, mt, delta, 6.0));

  const auto per = CoefficientPath::periodic(1.0, 0.5, kTwoPi, {-10, 1000});
  const auto wp = make_wave_params(per, 0.8, 0.95);
  CHECK(wp.d == std::max(wp.d_b, wp.d_sufficient));
  CHECK(wp.d_sufficient == sufficient_threshold(0.8, 0.95, wp.delta, wp.B.sup_norm()));
}

TEST_CASE("wave parameter selection") {
  const auto one = CoefficientPath::constant(1.0, {0, 1000});
  const auto wp = make_wave_params(one, 0.8, 1.0);
  CHECK(wp.delta == doctest::Approx(1.0 - 1.05 * 0.8));
  CHECK(select_delta(0.8, 1.0, 1.0) == doctest::Approx(0.16));
  CHECK(wp.B.sup_norm() <= 1e-12);
  CHECK(wp.d == doctest::Approx(1.0 / (0.16 * 0.25)));
  CHECK(wp.d == wp.d_b);
  WaveOptions o;
  o.d = 100.0;
  CHECK(make_wave_params(one, 0.8, 1.0, o).d == 100.0);
  o.d = 1.0;
  CHECK_THROWS_AS(make_wave_params(one, 0.8, 1.0, o), Error);
  CHECK_THROWS_AS(make_wave_params(one, 0.8, 1.7), Error);   // mu_tilde >= 2 mu
  CHECK_THROWS_AS(make_wave_params(one, 0.8, 0.7), Error);   // mu_tilde <= mu
  CHECK_THROWS_AS(make_wave_params(one, 0.95, 1.05), Error);  // mu_tilde^2 > a_inf
  WaveOptions big;
  big.delta = 0.5;
  CHECK_THROWS_AS(make_wave_params(one, 0.8, 1.0, big), Error);
}

TEST_CASE("lower solution inequality on a periodic path") {
  const auto per = CoefficientPath::periodic(1.0, 0.5, kTwoPi, {-10, 1000});
  const auto wp = make_wave_params(per, 0.8, 0.95);
  REQUIRE(wp.B.sup_norm() > 0.0);
  const auto phi = lower_solution(per, wp);
  const double mu = wp.mu, mt = wp.mu_tilde, k = mt / mu - 1.0, d = wp.d;

  // Independent re-derivation of the curve and its derivatives with B_b(t) = -B(t).
  double worst = -1e9, match = 0.0;
  for (double t = 0.05; t < 60.0; t += 0.37) {
    if (wp.B.is_breakpoint(t, 1e-6)) continue;
    const double a = per(t), C = frame_shift(per, mu, t), dC = (mu * mu + a) / mu;
    const double Bb = -wp.B(t), dBb = -wp.B.derivative(t);
    const double rho = C + std::log(d) / (mt - mu) + Bb / mu;
    CHECK(phi.validity_start(t) == doctest::Approx(rho).epsilon(1e-12));
    CHECK(std::abs(phi(t, rho)) <= 1e-12);
    CHECK(rho - C <= std::log(d) / (mt - mu) + wp.B.sup_norm() / mu + 1e-12);
    for (double y = 0.0; y < 30.0; y += 0.25) {
      const double xi = rho - C + y;
      const double e1 = std::exp(-mu * xi), e2 = d * std::exp(k * Bb - mt * xi);
      const double v = e1 - e2;
      match = std::max(match, std::abs(phi(t, C + xi) - v));
      const double v_t = mu * dC * e1 - e2 * (k * dBb + mt * dC);
      const double v_xx = mu * mu * e1 - mt * mt * e2;
      worst = std::max(worst, v_t - v_xx - a * v * (1.0 - v));
    }
  }
  CHECK(match <= 1e-12);
  CHECK(worst <= 1e-8);
}

TEST_CASE("lower curve shape") {
  const auto one = CoefficientPath::constant(1.0, {0, 1000});
  const auto wp = manual_params(0.8, 1.0, 0.3);
  CHECK(wp.d == doctest::Approx(1.0 / (0.3 * 0.25)));
  const auto phi = lower_solution(one, wp);
  double top = -1.0;
  for (double x = phi.validity_start(2.0); x < 60.0; x += 0.001) top = std::max(top, phi(2.0, x));
  CHECK(top < 1.0);
  CHECK(top > 0.0);

  const auto capped = capped_lower(one, wp);
  const double t = 2.0;
  const double xw = lower_peak(one, wp, t);
  const double C = frame_shift(one, 0.8, t);
  const double sup_formula = std::exp(-0.8 * (xw - C)) * (1.0 - 0.8 / 1.0);
  CHECK(capped(t, xw) == doctest::Approx(sup_formula).epsilon(1e-12));
  CHECK(top == doctest::Approx(sup_formula).epsilon(1e-6));
  double prev = 2.0;
  for (double x = C - 50.0; x < C + 60.0; x += 0.05) {
    const double v = capped(t, x);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
    if (x >= xw) {
      CHECK(v <= prev + 1e-15);
      prev = v;
    } else {
      CHECK(v == doctest::Approx(sup_formula).epsilon(1e-12));
    }
  }
  CHECK(capped.name() == "phi_minus");
  CHECK(capped.kind() == BoundKind::sub);
}

TEST_CASE("certification") {
  const auto one = CoefficientPath::constant(1.0, {0, 1000});
  const Grid1D g = Grid1D::with_spacing(-100, 150, 0.1);
  SolveConfig cfg;
  cfg.store_stride = 400;
  const auto traj = solve(make_initial(init::CappedExponential{0.8, 0.0}, g), one, 20.0, cfg);
  const double slack = default_slack()(g.dx(), cfg.dt);
  const auto wp = make_wave_params(one, 0.8, 1.0);
  const auto up = certify_ordering(traj, supersolution(one, 0.8), Relation::below, slack);
  const auto lo = certify_ordering(traj, capped_lower(one, wp), Relation::above, slack);
  CHECK(up.passed);
  CHECK(lo.passed);
  CHECK(up.max_violation <= 1e-6 + slack);
  CHECK(lo.max_violation <= slack);
  CHECK(up.rows.size() == traj.frames.size());
  const auto unc = certify_ordering(traj, lower_solution(one, wp), Relation::above, slack);
  CHECK(unc.passed);

  const BoundCurve ones(BoundKind::super, "one", [](double, double) { return 1.0; });
  const auto h = solve(make_initial(init::Heaviside{0.0}, g), one, 20.0, cfg);
  CHECK(certify_ordering(h, ones, Relation::below, 0.0).max_violation <= 1e-12);

  // Started above the supersolution: rejected as misconfigured.
  const auto hi = solve(make_initial(init::CappedExponential{0.5, 0.0}, g), one, 1.0, cfg);
  CHECK_THROWS_AS(certify_ordering(hi, supersolution(one, 0.8), Relation::below, slack), Error);

  Region r;
  r.x_lo = 0.0;
  r.x_hi = 10.0;
  const auto part = certify_ordering(traj, supersolution(one, 0.8), Relation::below, slack, r);
  for (const auto& row : part.rows) {
    CHECK(row.location >= 0.0);
    CHECK(row.location <= 10.0);
  }

  std::ostringstream os;
  write_csv(os, up);
  CHECK(os.str().rfind("t,max_violation,location\n0,", 0) == 0);
  std::ostringstream curve;
  const std::vector<double> ts{0.0};
  write_csv(curve, lower_solution(one, wp), Grid1D(-1.0, 1.0, 3), ts);
  CHECK(curve.str() == "t,x,value\n0,-1,nan\n0,0,nan\n0,1,nan\n");
}
