#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "kpplab/coeff.hpp"
#include "kpplab/error.hpp"
#include "kpplab/noise.hpp"

using namespace kpplab;

namespace {
constexpr double kPi = 3.141592653589793;

/// Composite Simpson rule, used as an independent quadrature oracle.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}
}  // namespace

TEST_CASE("constant path") {
  const auto p = CoefficientPath::constant(1.0, {0, 10});
  CHECK(p(7.3) == 1.0);
  CHECK(CoefficientPath::constant(2.0, {0, 10}).shifted(5.0)(0.0) == 2.0);
  CHECK(windowed_mean(p, 0.0, 10.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(windowed_mean(p, 1.7, 2.9) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(CoefficientPath::constant(0.0, {0, 1}), Error);
  CHECK_THROWS_AS(CoefficientPath::constant(-1.0, {0, 1}), Error);
  CHECK_THROWS_AS(p(11.0), Error);
}

TEST_CASE("periodic path") {
  const auto p = CoefficientPath::periodic(1.0, 0.5, 2 * kPi, {0, 1000});
  CHECK(p(kPi / 2) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(windowed_mean(p, 0.0, 2 * kPi) == doctest::Approx(1.0).epsilon(1e-14));
  // Integral against Simpson.
  const double simp = simpson([&](double t) { return p(t); }, 0.3, 7.1);
  CHECK(p.integral(0.3, 7.1) == doctest::Approx(simp).epsilon(1e-12));
  CHECK_THROWS_AS(CoefficientPath::periodic(1.0, 1.0, 1.0, {0, 1}), Error);
}

TEST_CASE("section5 block table") {
  // Knots from the recurrence l_{n+1} = L_n + n + 1, L_n = l_n + 4^{-(n+1)}.
  std::vector<double> l{0.0}, L;
  for (int n = 0; n < 6; ++n) {
    L.push_back(l[n] + std::pow(4.0, -(n + 1)));
    l.push_back(L[n] + n + 1);
  }
  CHECK(L[0] == 0.25);
  CHECK(l[1] == 1.25);
  const auto p = CoefficientPath::section5({-100, 100});
  for (double t : {0.26, 0.5, 1.0, 1.24}) CHECK(p(t) == 1.0);
  CHECK(windowed_mean(p, 0.25, 1.25) == doctest::Approx(1.0).epsilon(1e-14));
  // Plateaus alternate 1 (even blocks) and 2 (odd blocks).
  for (int n = 0; n < 5; ++n) {
    const double mid = 0.5 * (L[n] + l[n + 1]);
    CHECK(p(mid) == (n % 2 == 0 ? 1.0 : 2.0));
  }
  // Even spike f_{2n} with n = 2 sits on block 4 and peaks at 2^2.
  const double peak_t = 0.5 * (l[4] + L[4]);
  CHECK(p(peak_t) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(p.max_over(l[4], L[4]) == doctest::Approx(4.0).epsilon(1e-12));
  // Even symmetry.
  for (double t : {0.1, 2.0, 6.33, 10.3324, 55.5}) CHECK(p(-t) == p(t));
  for (double t = -100; t <= 100; t += 0.01) REQUIRE(p(t) > 0.0);
}

TEST_CASE("tabulated path is exact for piecewise-linear data") {
  const std::vector<double> v{1.0, 2.0, 0.5, 1.5, 3.0};
  const auto p = CoefficientPath::tabulated(-1.0, 0.5, v);
  CHECK(p(-0.75) == doctest::Approx(1.5));
  // Trapezoid sums are the exact integral of the interpolant.
  double trap = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) trap += 0.25 * (v[i - 1] + v[i]);
  CHECK(p.integral(-1.0, 1.0) == doctest::Approx(trap).epsilon(1e-15));
  CHECK(windowed_mean(p, -0.8, 0.7) ==
        doctest::Approx(simpson([&](double t) { return p(t); }, -0.8, 0.7, 30000) / 1.5).epsilon(1e-9));
  CHECK_THROWS_AS(CoefficientPath::tabulated(0, 0.5, {1.0, 0.0}), Error);
  CHECK_THROWS_AS(CoefficientPath::tabulated(0, 0.5, {1.0}), Error);
}

TEST_CASE("shift laws") {
  const auto c = CoefficientPath::constant(1.3, {0, 100});
  const auto per = CoefficientPath::periodic(1.0, 0.5, 2 * kPi, {-100, 100});
  const auto s5 = CoefficientPath::section5({-100, 100});
  const auto tab = CoefficientPath::tabulated(-50.0, 0.25, std::vector<double>(401, 1.0));
  for (double t = 0; t < 50; t += 0.37) CHECK(shift(c, 3.1)(t) == c(t + 3.1));
  for (const CoefficientPath* p : {&per, &s5}) {
    for (double t = -20; t < 20; t += 0.173) {
      CHECK(shift(*p, 4.25)(t) == (*p)(t + 4.25));
      CHECK(shift(shift(*p, 1.5), 2.75)(t) == shift(*p, 4.25)(t));
    }
  }
  CHECK(shift(tab, 2.0)(1.0) == tab(3.0));
  double diff = 0.0;
  const auto once = shift(per, 2 * kPi);
  for (double t = -50; t < 50; t += 0.01) diff = std::max(diff, std::abs(once(t) - per(t)));
  CHECK(diff == 0.0);
  CHECK(shift(per, 3.0).range().lo == doctest::Approx(-103.0));
}

TEST_CASE("estimate_means examples") {
  const auto c = CoefficientPath::constant(1.0, {0, 100});
  const auto m = estimate_means(c, 5.0, 0.05, {0, 100});
  CHECK(m.a_inf == doctest::Approx(1.0));
  CHECK(m.a_hat == doctest::Approx(1.0));
  CHECK(m.a_sup == doctest::Approx(1.0));

  const auto s5 = CoefficientPath::section5({-500, 500});
  const auto e = estimate_means(s5, 5.0, 0.05, {0, 300});
  CHECK(e.a_inf >= 0.95);
  CHECK(e.a_inf <= 1.05);
  CHECK(e.a_sup >= 1.9);
  CHECK(e.a_sup <= 2.05);

  const auto per = CoefficientPath::periodic(1.0, 0.5, 2 * kPi, {0, 1000});
  const auto pm = estimate_means(per, 20 * kPi, 0.05, {0, 80 * kPi});
  CHECK(std::abs(pm.a_inf - 1.0) <= 1e-8);
  CHECK(std::abs(pm.a_sup - 1.0) <= 1e-8);
  CHECK(std::abs(pm.a_hat - 1.0) <= 1e-8);

  CHECK_THROWS_AS(estimate_means(c, 60.0, 0.05, {0, 100}), Error);
  CHECK_THROWS_AS(estimate_means(c, 5.0, 0.0, {0, 100}), Error);
}

TEST_CASE("mean ordering and halving ladder, randomized") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    std::vector<double> v(401);
    for (double& x : v) x = 0.2 + 3.0 * U(rng);
    const auto p = CoefficientPath::tabulated(0.0, 0.5, v);
    const double r = std::vector<double>{2.0, 4.0, 8.0}[k % 3];
    const std::vector<double> ladder{4 * r, 2 * r, r};
    const auto est = mean_ladder(p, ladder, 0.5, {0, 200});
    for (std::size_t i = 0; i < est.size(); ++i) {
      CHECK(est[i].a_inf <= est[i].a_hat);
      CHECK(est[i].a_hat <= est[i].a_sup);
      if (i > 0) {
        CHECK(est[i].a_inf <= est[i - 1].a_inf + 1e-12);
        CHECK(est[i].a_sup >= est[i - 1].a_sup - 1e-12);
      }
    }
  }
}

TEST_CASE("build_B examples") {
  const auto c = CoefficientPath::constant(1.0, {0, 1000});
  const auto B0 = build_B(c, 0.5, 1.0, 10.0, {0, 400});
  for (double e : B0.block_means()) CHECK(e == doctest::Approx(1.0));
  CHECK(B0.sup_norm() <= 1e-12);
  CHECK(std::abs(B0(17.3)) <= 1e-12);

  const auto per = CoefficientPath::periodic(1.0, 0.5, 2 * kPi, {0, 1000});
  const auto B = build_B(per, 0.9, 1.0, 2 * kPi, {0, 200 * kPi});
  CHECK(B.block_length() == doctest::Approx(2 * kPi));
  for (double e : B.block_means()) CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
  double err = 0.0;
  for (double t = 0.0; t < 20.0; t += 0.013) err = std::max(err, std::abs(B(t) - 0.5 * (1 - std::cos(t))));
  CHECK(err <= 1e-10);
  CHECK(B.sup_norm() == doctest::Approx(1.0).epsilon(1e-4));

  const auto s5 = CoefficientPath::section5({-1000, 1000});
  const auto Bs = build_B(s5, 0.9, 0.95, 5.0, {0, 400});
  CHECK(Bs.min_block_mean() >= 0.9);
  // Certificate: scale*b - B' = eps_k >= gamma inside blocks; zeros at breakpoints.
  double worst = 1e9;
  const auto cov = Bs.coverage();
  for (double t = cov.lo; t < cov.hi; t += 0.0137) {
    if (Bs.is_breakpoint(t, 1e-6)) continue;
    worst = std::min(worst, 0.95 * s5(t) - Bs.derivative(t));
  }
  CHECK(worst >= 0.9 - 1e-12);
  for (std::int64_t k = 0; k < 4; ++k) CHECK(std::abs(Bs(static_cast<double>(k) * Bs.block_length())) <= 1e-12);
  const auto est = estimate_means(s5, 5.0, 0.05, {0, 400});
  CHECK(Bs.sup_norm() <= 2 * Bs.block_length() * est.a_sup);

  CHECK_THROWS_AS(build_B(c, 1.5, 1.0, 10.0, {0, 400}), Error);
}

TEST_CASE("path CSV header") {
  std::ostringstream os;
  write_csv(os, CoefficientPath::periodic(1.0, 0.5, 2.0, {0, 10}), 0.0, 1.0, 0.5);
  const std::string s = os.str();
  CHECK(s.rfind("# kind=periodic", 0) == 0);
  CHECK(s.find("\nt,value\n0,1\n0.5,") != std::string::npos);
}

TEST_CASE("noise realizations") {
  NoiseParams np;
  np.seed = 42;
  np.range = {0, 50};
  const auto a = NoisePath::generate(np);
  const auto b = NoisePath::generate(np);
  CHECK(std::equal(a.samples().begin(), a.samples().end(), b.samples().begin(), b.samples().end()));
  for (double v : a.samples()) REQUIRE(std::abs(v) <= np.xi_max);

  np.sigma = 0.0;
  const auto z = NoisePath::generate(np);
  for (double v : z.samples()) REQUIRE(v == 0.0);

  np.seed = 43;
  np.sigma = 0.5;
  const auto c = NoisePath::generate(np);
  CHECK_FALSE(std::equal(a.samples().begin(), a.samples().end(), c.samples().begin()));

  // Integral of the stored interpolant against Simpson, and shift consistency.
  CHECK(a.integral(1.0, 9.0) == doctest::Approx(simpson([&](double t) { return a(t); }, 1.0, 9.0, 80000)).epsilon(1e-8));
  CHECK(a.shifted(2.5)(1.0) == doctest::Approx(a(3.5)).epsilon(1e-14));
  CHECK_THROWS_AS(a(60.0), Error);
  np.xi_max = 1.0;
  CHECK_THROWS_AS(NoisePath::generate(np), Error);
}

TEST_CASE("noise mean Monte-Carlo check") {
  NoiseParams np;
  np.seed = 5;
  np.kappa = 1.0;
  np.step = 1e-2;
  np.range = {0, 1e4};
  const auto n = NoisePath::generate(np);
  const auto s = n.samples();
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(s.size()));
  const double n_eff = np.range.length() * np.kappa / 2.0;
  CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(n_eff));
}

TEST_CASE("equilibrium path") {
  NoiseParams np;
  np.step = 0.01;
  np.range = {-100, 20};
  const std::size_t n = 12001;
  const auto zero = NoisePath::from_samples(np, std::vector<double>(n, 0.0));
  const auto p0 = equilibrium_path(zero, {0, 10});
  for (double t = 0; t <= 10; t += 0.5) CHECK(p0(t) == doctest::Approx(1.0).epsilon(1e-4));  // trapezoid error O(step^2)
  const auto half = NoisePath::from_samples(np, std::vector<double>(n, 0.5));
  const auto ph = equilibrium_path(half, {0, 10});
  for (double t = 0; t <= 10; t += 0.5) CHECK(ph(t) == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(ph.kind() == PathKind::equilibrium);

  NoiseParams lp;
  lp.seed = 9;
  lp.step = 0.01;
  lp.range = {-100, 2010};
  const auto path = equilibrium_path(NoisePath::generate(lp), {0, 2000}, 1);
  CHECK(windowed_mean(path, 0.0, 2000.0) == doctest::Approx(1.0).epsilon(0.05));
}
