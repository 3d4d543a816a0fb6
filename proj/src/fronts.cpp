#include "kpplab/fronts.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <future>
#include <limits>
#include "json.hpp"
#include <ostream>
#include <thread>

#include "kpplab/error.hpp"

namespace kpplab {

std::optional<double> front_position(const Field& field, double level) {
  const auto& u = field.u;
  for (std::size_t i = u.size() - 1; i-- > 0;) {
    if (u[i] >= level && u[i + 1] < level) {
      const double w = (u[i] - level) / (u[i] - u[i + 1]);
      return field.grid.x(i) + w * field.grid.dx();
    }
  }
  return std::nullopt;
}

FrontTrace track(const Trajectory& traj, std::span<const double> levels, std::string provenance) {
  FrontTrace trace;
  trace.levels.assign(levels.begin(), levels.end());
  trace.provenance = std::move(provenance);
  trace.times = traj.times();
  trace.positions.resize(levels.size());
  for (std::size_t l = 0; l < levels.size(); ++l) {
    trace.positions[l].reserve(traj.frames.size());
    for (const Field& f : traj.frames) trace.positions[l].push_back(front_position(f, levels[l]));
  }
  return trace;
}

FrontTrace track(const Trajectory& traj, std::string provenance) {
  static constexpr double kLevels[] = {0.5, 0.25};
  return track(traj, kLevels, std::move(provenance));
}

void write_csv(std::ostream& os, const FrontTrace& trace) {
  if (!trace.provenance.empty()) os << "# " << trace.provenance << '\n';
  os << 't';
  for (double level : trace.levels) {
    if (level == 0.5) {
      os << ",x_half";
    } else if (level == 0.25) {
      os << ",x_quarter";
    } else {
      os << ",x_" << format_number(level);
    }
  }
  os << '\n';
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    os << format_number(trace.times[k]);
    for (const auto& col : trace.positions) {
      os << ',';
      if (col[k]) os << format_number(*col[k]);
    }
    os << '\n';
  }
}

SpeedEstimate estimate_speed(const FrontTrace& trace, double t_a, double t_b,
                             std::size_t level_index) {
  require(level_index < trace.positions.size(), "estimate_speed: no such level");
  require(t_b - t_a >= 10.0 - 1e-9, "estimate_speed: fit window shorter than 10 time units");
  std::vector<double> ts, xs;
  const auto& col = trace.positions[level_index];
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    if (t < t_a - 1e-9 || t > t_b + 1e-9 || !col[k]) continue;
    ts.push_back(t);
    xs.push_back(*col[k]);
  }
  require(ts.size() >= 3, "estimate_speed: fewer than 3 front samples in the fit window");
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    mx += xs[i];
  }
  mt /= n;
  mx /= n;
  double stt = 0.0, stx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stx += (ts[i] - mt) * (xs[i] - mx);
  }
  SpeedEstimate est;
  est.speed = stx / stt;
  const double icpt = mx - est.speed * mt;
  double ssr = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = xs[i] - (icpt + est.speed * ts[i]);
    ssr += r * r;
  }
  est.residual_norm = std::sqrt(ssr / n);
  est.std_error = std::sqrt(ssr / (n - 2.0) / stt);
  est.t_a = t_a;
  est.t_b = t_b;
  est.samples = ts.size();
  est.endpoint_ratio = ts.back() > 0.0 ? xs.back() / ts.back() : 0.0;
  return est;
}

SpeedEstimate estimate_speed(const FrontTrace& trace, double burn_in, std::size_t level_index) {
  require(!trace.times.empty(), "estimate_speed: empty trace");
  require(burn_in >= 0.0 && burn_in < 1.0, "estimate_speed: burn-in fraction must lie in [0, 1)");
  const double t0 = trace.times.front();
  const double t1 = trace.times.back();
  return estimate_speed(trace, t0 + burn_in * (t1 - t0), t1, level_index);
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::spread: return "spread";
    case Decision::vanish: return "vanish";
    case Decision::undecided: return "undecided";
  }
  return "undecided";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::confirmed: return "confirmed";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::violated: return "violated";
  }
  return "inconclusive";
}

std::vector<double> default_shift_set(double span, std::size_t count) {
  require(count >= 1 && span >= 0.0, "default_shift_set: need count >= 1 and span >= 0");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = span * static_cast<double>(i) / static_cast<double>(count);
  return out;
}

namespace {

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, count) on up to `threads` workers; results are
/// written by index so the output does not depend on scheduling.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, unsigned threads, F job) {
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = worker_count(threads, count);
  std::vector<std::future<void>> pool;
  for (unsigned w = 1; w < n; ++w) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct RegionStats {
  double inner_min;
  double outer_max;
};

RegionStats region_stats(const Field& f, double c, double t, InitialClass cls, double margin) {
  const Grid1D& g = f.grid;
  const double edge = c * t;
  double inner = std::numeric_limits<double>::infinity();
  double outer = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    const double v = f.u[i];
    if (cls == InitialClass::compact) {
      if (std::abs(x) <= edge) inner = std::min(inner, v);
      if (std::abs(x) >= edge) outer = std::max(outer, v);
    } else {
      if (x <= edge && x >= g.x_lo + margin) inner = std::min(inner, v);
      if (x >= edge) outer = std::max(outer, v);
    }
  }
  if (!std::isfinite(inner)) inner = f.at(std::clamp(0.0, g.x_lo, g.x_hi));
  return {inner, outer};
}

}  // namespace

SpeedInterval probe_speed_interval(const CoefficientPath& path, const ProbeSetup& setup,
                                   std::span<const double> c_grid, std::span<const double> shifts) {
  require(!c_grid.empty() && !shifts.empty(), "probe_speed_interval: empty speed grid or shift set");
  require(std::is_sorted(c_grid.begin(), c_grid.end()), "probe_speed_interval: speed grid must be increasing");
  require(c_grid.front() >= 0.0, "probe_speed_interval: speeds must be nonnegative");
  require(setup.t_probe > 0.0, "probe_speed_interval: t_probe must be positive");
  const double reach = c_grid.back() * setup.t_probe;
  require(reach < setup.grid.x_hi && (setup.initial_class == InitialClass::front_like || -reach > setup.grid.x_lo),
          "probe_speed_interval: domain too small for the largest probe speed");

  const Field u0 = make_initial(setup.initial, setup.grid);
  auto finals = parallel_map<Field>(shifts.size(), setup.threads, [&](std::size_t j) {
    const auto traj = solve(u0, path.shifted(shifts[j]), setup.t_probe, setup.config);
    return traj.frames.back();
  });

  SpeedInterval out;
  out.c_grid.assign(c_grid.begin(), c_grid.end());
  out.shifts.assign(shifts.begin(), shifts.end());
  out.decisions.resize(c_grid.size() * shifts.size());
  out.per_speed.resize(c_grid.size());
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    bool all_spread = true, all_vanish = true;
    for (std::size_t j = 0; j < shifts.size(); ++j) {
      const auto st = region_stats(finals[j], c_grid[i], finals[j].t, setup.initial_class, setup.config.margin);
      Decision d = Decision::undecided;
      if (st.inner_min >= setup.eps_spread) {
        d = Decision::spread;
      } else if (st.outer_max <= setup.eps_vanish) {
        d = Decision::vanish;
      }
      out.decisions[i * shifts.size() + j] = d;
      all_spread = all_spread && d == Decision::spread;
      all_vanish = all_vanish && d == Decision::vanish;
    }
    out.per_speed[i] = all_spread ? Decision::spread : all_vanish ? Decision::vanish : Decision::undecided;
  }

  std::size_t lo_end = 0;
  while (lo_end < c_grid.size() && out.per_speed[lo_end] == Decision::spread) ++lo_end;
  std::size_t hi_begin = c_grid.size();
  while (hi_begin > 0 && out.per_speed[hi_begin - 1] == Decision::vanish) --hi_begin;
  out.has_lo = lo_end > 0;
  out.has_hi = hi_begin < c_grid.size();
  out.c_lo = out.has_lo ? c_grid[lo_end - 1] : std::numeric_limits<double>::quiet_NaN();
  out.c_hi = out.has_hi ? c_grid[hi_begin] : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = lo_end; i < hi_begin; ++i) {
    if (out.per_speed[i] != Decision::undecided) out.monotone = false;
  }
  return out;
}

std::string to_json(const SpeedInterval& interval) {
  nlohmann::ordered_json j;
  auto num = [](double v) -> nlohmann::ordered_json {
    if (!std::isfinite(v)) return nullptr;
    const std::string s = format_number(v);
    double out = v;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
  };
  j["c_lo"] = interval.has_lo ? num(interval.c_lo) : nullptr;
  j["c_hi"] = interval.has_hi ? num(interval.c_hi) : nullptr;
  j["monotone"] = interval.monotone;
  auto& rows = j["decisions"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < interval.c_grid.size(); ++i) {
    nlohmann::ordered_json row;
    row["c"] = num(interval.c_grid[i]);
    row["aggregate"] = to_string(interval.per_speed[i]);
    auto& per = row["per_shift"] = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < interval.shifts.size(); ++s) {
      per.push_back({{"shift", num(interval.shifts[s])},
                     {"decision", to_string(interval.decisions[i * interval.shifts.size() + s])}});
    }
    rows.push_back(std::move(row));
  }
  return j.dump(2);
}

namespace {

/// Storage stride landing exactly on every requested time.
std::size_t stride_for(std::span<const double> times, double dt) {
  for (double unit : {1.0, 0.5, 0.25, 0.1}) {
    bool ok = true;
    for (double t : times) {
      const double q = t / unit;
      if (std::abs(q - std::round(q)) > 1e-9) ok = false;
    }
    const double k = unit / dt;
    if (ok && std::abs(k - std::round(k)) < 1e-9) return static_cast<std::size_t>(std::llround(k));
  }
  fail(ErrorCode::invalid_argument,
       "subadditivity: pair times must be multiples of 0.1 and the time step must divide that resolution");
}

double front_at(const Trajectory& traj, double t, double level) {
  const auto x = front_position(traj.frame_at(t, 1e-7), level);
  if (!x) fail(ErrorCode::no_front, "subadditivity: no front at t=" + format_number(t));
  return *x;
}

}  // namespace

SubadditivityReport subadditivity_check(const CoefficientPath& path, std::span<const double> times,
                                        const SubadditivitySetup& setup) {
  require(!times.empty(), "subadditivity: empty pair grid");
  std::vector<double> ts(times.begin(), times.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  require(ts.front() >= setup.t_min, "subadditivity: pair times below t_min");
  const double t_max = ts.back();

  std::vector<double> all = ts;
  for (double a : ts) {
    for (double b : ts) all.push_back(a + b);
  }
  SolveConfig cfg = setup.config;
  cfg.store_stride = stride_for(all, cfg.dt);
  const Field u0 = make_initial(init::Heaviside{0.0}, setup.grid);

  // Job 0 is the unshifted run to 2 t_max; job i >= 1 restarts on the path
  // shifted by ts[i-1] and runs to t_max.
  auto runs = parallel_map<Trajectory>(ts.size() + 1, setup.threads, [&](std::size_t i) {
    if (i == 0) return solve(u0, path, 2.0 * t_max, cfg);
    return solve(u0, path.shifted(ts[i - 1]), t_max, cfg);
  });

  SubadditivityReport rep;
  rep.times = ts;
  rep.defects.resize(ts.size() * ts.size());
  rep.M_hat = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x_t = front_at(runs[0], ts[i], setup.level);
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const double x_s_shift = front_at(runs[i + 1], ts[j], setup.level);
      const double x_sum = front_at(runs[0], ts[i] + ts[j], setup.level);
      const double v = x_t + x_s_shift - x_sum;
      rep.defects[i * ts.size() + j] = v;
      if (v > rep.M_hat) {
        rep.M_hat = v;
        rep.arg_t = ts[i];
        rep.arg_s = ts[j];
      }
    }
  }
  return rep;
}

SubadditivityStability subadditivity_stability(const CoefficientPath& path,
                                               std::span<const double> times,
                                               const SubadditivitySetup& setup) {
  SubadditivityStability out;
  out.base = subadditivity_check(path, times, setup);
  std::vector<double> refined = out.base.times;
  for (std::size_t i = 0; i + 1 < out.base.times.size(); ++i) {
    refined.push_back(0.5 * (out.base.times[i] + out.base.times[i + 1]));
  }
  out.refined = subadditivity_check(path, refined, setup);
  out.relative_change = std::abs(out.refined.M_hat - out.base.M_hat) /
                        std::max(std::abs(out.base.M_hat), setup.grid.dx());
  out.flagged = out.relative_change > 0.2;
  return out;
}

TakeoverReport takeover_verify(const Trajectory& traj, const MeanEstimate& means, double h,
                               std::span<const double> t_checks, double eps_outer, double eps_inner) {
  require(h > 0.0, "takeover_verify: h must be positive");
  require(means.a_hat > 0.0, "takeover_verify: mean estimate must be positive");
  require(!t_checks.empty(), "takeover_verify: no check times");
  TakeoverReport rep;
  rep.c_hat = 2.0 * std::sqrt(means.a_hat);
  rep.h = h;
  rep.eps_outer = eps_outer;
  rep.eps_inner = eps_inner;
  const Grid1D& g = traj.grid;
  for (double t : t_checks) {
    const Field& f = traj.frame_at(t, 1e-7);
    const double outer_edge = (rep.c_hat + h) * t;
    if (outer_edge > g.x_hi) {
      fail(ErrorCode::invalid_argument, "takeover_verify: domain too small for the outer region at t=" +
                                            format_number(t));
    }
    TakeoverCheck c;
    c.t = t;
    double outer = 0.0;
    double inner = std::numeric_limits<double>::infinity();
    const double inner_edge = (rep.c_hat - h) * t;
    for (std::size_t i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      if (x >= outer_edge) outer = std::max(outer, f.u[i]);
      if (h < rep.c_hat && x <= inner_edge) inner = std::min(inner, f.u[i]);
    }
    if (!std::isfinite(inner)) inner = f.at(0.0);
    c.outer_sup = outer;
    c.inner_deficit = 1.0 - inner;
    c.ok = c.outer_sup <= eps_outer && c.inner_deficit <= eps_inner;
    rep.checks.push_back(c);
  }
  const TakeoverCheck& last = rep.checks.back();
  if (last.ok) {
    rep.verdict = Verdict::confirmed;
  } else {
    bool improving = rep.checks.size() >= 2;
    for (std::size_t k = 1; k < rep.checks.size(); ++k) {
      improving = improving && rep.checks[k].outer_sup <= rep.checks[k - 1].outer_sup + 1e-12 &&
                  rep.checks[k].inner_deficit <= rep.checks[k - 1].inner_deficit + 1e-12;
    }
    rep.verdict = improving ? Verdict::inconclusive : Verdict::violated;
  }
  return rep;
}

ProfileOrderingReport profile_ordering_check(const Trajectory& heaviside, const Trajectory& phi_plus,
                                             std::span<const double> times, double exclusion) {
  const Grid1D& g = heaviside.grid;
  require(g.n == phi_plus.grid.n && g.x_lo == phi_plus.grid.x_lo && g.x_hi == phi_plus.grid.x_hi,
          "profile_ordering_check: trajectories must share a grid");
  if (exclusion < 0.0) exclusion = 2.0 * g.dx();
  ProfileOrderingReport rep;
  for (double t : times) {
    const Field& a = heaviside.frame_at(t, 1e-7);
    const Field& b = phi_plus.frame_at(t, 1e-7);
    const auto xa = front_position(a, 0.5);
    const auto xb = front_position(b, 0.5);
    if (!xa || !xb) fail(ErrorCode::no_front, "profile_ordering_check: missing crossing at t=" + format_number(t));
    OrderingCheck c{t, *xa, *xb, 0.0};
    for (std::size_t i = 0; i < g.n; ++i) {
      const double y = g.x(i) - *xa;
      const double xb_pos = *xb + y;
      if (xb_pos < g.x_lo || xb_pos > g.x_hi || std::abs(y) <= exclusion) continue;
      const double ua = a.u[i];
      const double ub = b.at(xb_pos);
      const double v = y < 0.0 ? ub - ua : ua - ub;
      c.violation = std::max(c.violation, v);
    }
    rep.max_violation = std::max(rep.max_violation, c.violation);
    rep.checks.push_back(c);
  }
  return rep;
}

double tail_deviation(const Trajectory& moving, double x_probe, double t_a, double t_b) {
  require(t_b >= t_a, "tail_deviation: empty window");
  bool any = false;
  double dev = 0.0;
  for (const Field& f : moving.frames) {
    if (f.t < t_a - 1e-9 || f.t > t_b + 1e-9) continue;
    // A frame already above 1/2 everywhere is fully taken over, not early.
    if (!any && !front_position(f, 0.5) && f.max() < 0.5) {
      fail(ErrorCode::no_front, "tail_deviation: window starts before a front has formed");
    }
    any = true;
    for (std::size_t i = 0; i < f.grid.n && f.grid.x(i) <= x_probe; ++i) {
      dev = std::max(dev, std::abs(f.u[i] - 1.0));
    }
  }
  require(any, "tail_deviation: no stored frames in the window");
  return dev;
}

TailReport tail_uniformity(const Trajectory& moving, std::span<const double> x_probes, double t_a,
                           double t_b) {
  TailReport rep;
  rep.probes.assign(x_probes.begin(), x_probes.end());
  std::sort(rep.probes.begin(), rep.probes.end(), std::greater<>());
  for (double x : rep.probes) rep.deviations.push_back(tail_deviation(moving, x, t_a, t_b));
  for (std::size_t k = 1; k < rep.deviations.size(); ++k) {
    if (rep.deviations[k] > rep.deviations[k - 1] + 1e-15) rep.monotone = false;
  }
  return rep;
}

}  // namespace kpplab
