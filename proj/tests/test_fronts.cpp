#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "kpplab/error.hpp"
#include "kpplab/fronts.hpp"

using namespace kpplab;

namespace {

Field field_from(const Grid1D& g, auto f) {
  Field out{g, std::vector<double>(g.n), 0.0};
  for (std::size_t i = 0; i < g.n; ++i) out.u[i] = f(g.x(i));
  return out;
}

FrontTrace synthetic(const std::vector<double>& ts, auto x_of_t) {
  FrontTrace tr;
  tr.levels = {0.5};
  tr.times = ts;
  tr.positions.resize(1);
  for (double t : ts) tr.positions[0].push_back(x_of_t(t));
  return tr;
}

std::vector<double> grid_times(double t0, double t1, double dt) {
  std::vector<double> ts;
  for (int k = 0; t0 + k * dt <= t1 + 1e-9; ++k) ts.push_back(t0 + k * dt);
  return ts;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

/// One shared a = 1 Heaviside run on [-100, 400] up to t = 100.
const Trajectory& classical_run() {
  static const Trajectory traj = [] {
    SolveConfig cfg;
    cfg.store_stride = 100;
    return solve(make_initial(init::Heaviside{0.0}, Grid1D::with_spacing(-100, 400, 0.1)),
                 CoefficientPath::constant(1.0, {0, 200}), 100.0, cfg);
  }();
  return traj;
}

}  // namespace

TEST_CASE("front_position") {
  const Grid1D g = Grid1D::with_spacing(-10, 20, 0.1);
  CHECK(*front_position(make_initial(init::Heaviside{0.0}, g), 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  const auto e = field_from(g, [](double x) { return std::min(1.0, std::exp(-(x - 5.0))); });
  CHECK(std::abs(*front_position(e, 0.5) - (5.0 + std::log(2.0))) <= 0.01);
  CHECK_FALSE(front_position(field_from(g, [](double) { return 0.2; }), 0.5).has_value());
  // Two crossings: the rightmost wins.
  const auto two = field_from(g, [](double x) { return (x < 0.0 || (x > 5.0 && x < 10.0)) ? 1.0 : 0.0; });
  CHECK(*front_position(two, 0.5) > 9.0);
}

TEST_CASE("track") {
  const Grid1D g = Grid1D::with_spacing(-10, 10, 0.5);
  SolveConfig cfg;
  cfg.margin = 0.0;
  cfg.store_stride = 10;
  const auto flat = solve(make_initial(init::Constant{0.3}, g), CoefficientPath::constant(1.0, {0, 5}), 2.0, cfg);
  const auto tr = track(flat);
  for (const auto& col : tr.positions)
    for (const auto& x : col) CHECK_FALSE(x.has_value());

  const auto ht = track(classical_run());
  double prev = -1e9, w_min = 1e9, w_max = -1e9;
  for (std::size_t k = 0; k < ht.times.size(); ++k) {
    if (ht.times[k] < 1.0) continue;
    const double x = *ht.positions[0][k];
    CHECK(x > prev);
    prev = x;
    if (ht.times[k] >= 10.0) {
      const double w = *ht.positions[1][k] - x;
      w_min = std::min(w_min, w);
      w_max = std::max(w_max, w);
    }
  }
  CHECK(w_min > 0.0);
  CHECK(w_max <= 3.0);
  CHECK(w_max - w_min <= 0.5);

  std::ostringstream os;
  write_csv(os, ht);
  CHECK(os.str().rfind("t,x_half,x_quarter\n0,0,", 0) == 0);
}

TEST_CASE("estimate_speed") {
  const auto ts = grid_times(0, 50, 0.5);
  const auto s = estimate_speed(synthetic(ts, [](double t) { return 2.0 * t; }), 10.0, 50.0);
  CHECK(s.speed == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.std_error <= 1e-12);
  CHECK(s.endpoint_ratio == doctest::Approx(2.0));
  CHECK(s.samples == 81);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double E : {0.1, 1.0, 3.0}) {
    const auto tr = synthetic(ts, [&](double t) { return 1.7 * t + 4.0 + E * U(rng); });
    const auto est = estimate_speed(tr, 10.0, 50.0);
    CHECK(std::abs(est.speed - 1.7) <= 2 * E / 40.0);
    CHECK(std::isfinite(est.std_error));
  }
  CHECK(code_of([&] { estimate_speed(synthetic(ts, [](double t) { return t; }), 10.0, 15.0); }) ==
        ErrorCode::invalid_argument);
  const auto burn = estimate_speed(synthetic(ts, [](double t) { return 3.0 * t; }), 0.25);
  CHECK(burn.t_a == doctest::Approx(12.5));
}

TEST_CASE("classical speed") {
  const auto s = estimate_speed(track(classical_run()), 40.0, 100.0);
  CHECK(s.speed >= 1.90);
  CHECK(s.speed <= 2.00);
}

TEST_CASE("translation equivariance") {
  const Grid1D g = Grid1D::with_spacing(-60, 120, 0.1);
  SolveConfig cfg;
  cfg.margin = 0.0;
  cfg.store_stride = 400;
  const auto path = CoefficientPath::periodic(1.0, 0.5, 3.0, {0, 30});
  const auto a = track(solve(make_initial(init::Heaviside{0.0}, g), path, 20.0, cfg));
  const auto b = track(solve(make_initial(init::Heaviside{3.0}, g), path, 20.0, cfg));
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    CHECK(*b.positions[0][k] - *a.positions[0][k] == doctest::Approx(3.0).epsilon(1e-9));
  }
}

TEST_CASE("speed interval for a = 1 with compact data") {
  ProbeSetup ps;
  ps.grid = Grid1D::with_spacing(-250, 250, 0.1);
  ps.initial = init::CompactBump{0.0, 5.0, 1.0};
  ps.config.store_stride = 1000000;
  ps.t_probe = 80.0;
  std::vector<double> cs;
  for (int i = 0; i <= 30; ++i) cs.push_back(0.1 * i);
  const std::vector<double> shifts{0.0, 40.0};
  const auto path = CoefficientPath::constant(1.0, {0, 200});
  const auto iv = probe_speed_interval(path, ps, cs, shifts);
  REQUIRE(iv.has_lo);
  REQUIRE(iv.has_hi);
  CHECK(iv.c_lo >= 1.8);
  CHECK(iv.c_hi <= 2.2);
  CHECK(iv.c_lo <= iv.c_hi);
  CHECK(iv.monotone);
  CHECK(iv.per_speed.front() == Decision::spread);  // c = 0

  ps.threads = 1;
  const auto serial = probe_speed_interval(path, ps, cs, shifts);
  CHECK(serial.decisions == iv.decisions);
  CHECK(to_json(serial) == to_json(iv));
  const auto j = nlohmann::json::parse(to_json(iv));
  CHECK(j["decisions"].size() == cs.size());
  CHECK(j["decisions"][0]["per_shift"].size() == 2);
}

TEST_CASE("default shift set") {
  const auto s = default_shift_set(80.0);
  REQUIRE(s.size() == 8);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(10.0));
  CHECK(s.back() < 80.0);
}

TEST_CASE("subadditivity") {
  SubadditivitySetup ss;
  ss.grid = Grid1D::with_spacing(-100, 200, 0.1);
  const std::vector<double> ts{2, 5, 10, 20};
  const auto rep = subadditivity_check(CoefficientPath::constant(1.0, {0, 100}), ts, ss);
  const std::size_t n = ts.size();
  REQUIRE(rep.defects.size() == n * n);
  for (double v : rep.defects) {
    CHECK(std::isfinite(v));
    CHECK(std::abs(v) <= 10.0);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      CHECK(std::abs(rep.defects[i * n + j] - rep.defects[j * n + i]) <= 2 * ss.grid.dx());
  CHECK(rep.M_hat <= 10.0);
  CHECK(code_of([&] { subadditivity_check(CoefficientPath::constant(1.0, {0, 100}), std::vector<double>{1.0, 5.0}, ss); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("take-over verification") {
  const auto& traj = classical_run();
  MeanEstimate m;
  m.a_inf = m.a_hat = m.a_sup = 1.0;
  const std::vector<double> checks{40.0, 80.0};
  const auto rep = takeover_verify(traj, m, 0.3, checks);
  CHECK(rep.c_hat == 2.0);
  CHECK(rep.checks.back().outer_sup <= 1e-3);
  CHECK(1.0 - rep.checks.back().inner_deficit >= 0.99);
  CHECK(rep.verdict == Verdict::confirmed);

  const std::vector<double> late{80.0};
  const auto wide = takeover_verify(traj, m, 2.5, late);
  CHECK(wide.checks[0].inner_deficit == doctest::Approx(1.0 - traj.frame_at(80.0).at(0.0)));
  CHECK(wide.checks[0].inner_deficit <= 1e-6);

  const std::vector<double> too_late{100.0};
  CHECK(code_of([&] { takeover_verify(traj, m, 2.5, too_late); }) == ErrorCode::invalid_argument);

  // A strict inner tolerance that is never met, with shrinking deficits, is inconclusive.
  const std::vector<double> early{5.0, 10.0, 20.0};
  CHECK(takeover_verify(traj, m, 0.3, early, 1e-3, 1e-30).verdict == Verdict::inconclusive);
  CHECK(to_string(Verdict::violated) == "violated");
}

TEST_CASE("profile ordering") {
  const Grid1D g = Grid1D::with_spacing(-100, 250, 0.1);
  const auto one = CoefficientPath::constant(1.0, {0, 100});
  SolveConfig cfg;
  cfg.store_stride = 400;
  const auto h = solve(make_initial(init::Heaviside{0.0}, g), one, 20.0, cfg);
  const auto p = solve(make_initial(init::CappedExponential{0.8, 0.0}, g), one, 20.0, cfg);
  const std::vector<double> t0{0.0};
  CHECK(profile_ordering_check(h, p, t0).max_violation == 0.0);
  const std::vector<double> t20{20.0};
  CHECK(profile_ordering_check(h, p, t20).max_violation <= 1e-3);
  const std::vector<double> both{0.0, 20.0};
  CHECK(profile_ordering_check(h, h, both).max_violation <= 1e-12);  // interpolation rounding
}

TEST_CASE("tail uniformity") {
  const Grid1D g = Grid1D::with_spacing(-150, 100, 0.1);
  const auto one = CoefficientPath::constant(1.0, {0, 100});
  SolveConfig cfg;
  cfg.store_stride = 200;
  const auto v = solve_moving_frame(make_initial(init::Heaviside{0.0}, g), one, 1.0, 60.0, cfg);
  CHECK(tail_deviation(v, -20.0, 10.0, 60.0) <= 1e-2);
  CHECK(tail_deviation(v, g.x_lo + cfg.margin, 10.0, 60.0) <= 1e-3);
  const std::vector<double> probes{-10.0, -20.0, -40.0, -80.0};
  const auto rep = tail_uniformity(v, probes, 10.0, 60.0);
  CHECK(rep.monotone);
  CHECK(rep.probes.front() == -10.0);

  const auto ones = solve_moving_frame(make_initial(init::Constant{1.0}, g), one, 1.0, 5.0, cfg);
  CHECK(tail_deviation(ones, 0.0, 1.0, 5.0) <= 1e-12);
  const auto low = solve_moving_frame(make_initial(init::Constant{0.01}, g), one, 1.0, 1.0, cfg);
  CHECK(code_of([&] { tail_deviation(low, 0.0, 0.0, 1.0); }) == ErrorCode::no_front);
}
