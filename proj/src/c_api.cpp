#include "kpplab/kpplab.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "kpplab/equilibria.hpp"
#include "kpplab/error.hpp"
#include "kpplab/fronts.hpp"
#include "kpplab/noise.hpp"
#include "kpplab/subsuper.hpp"

#ifndef KPPLAB_VERSION
#define KPPLAB_VERSION "0.0.0"
#endif

struct kpp_path {
  kpplab::CoefficientPath path;
};
struct kpp_noise {
  kpplab::NoisePath noise;
};
struct kpp_traj {
  kpplab::Trajectory traj;
};
struct kpp_bound {
  kpplab::BoundCurve curve;
  std::optional<kpplab::WaveParams> params;
};

namespace {

using namespace kpplab;

thread_local std::string g_last_error;

kpp_status to_status(ErrorCode code) { return static_cast<kpp_status>(static_cast<int>(code)); }

/// Runs f, translating exceptions into status codes.
template <class F>
kpp_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return KPP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return KPP_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KPP_E_INTERNAL;
  }
}

template <class T>
T& deref(T* p, const char* what) {
  if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " is null");
  return *p;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::ofstream open_out(const char* file, std::ios::openmode mode = std::ios::out) {
  if (!file) fail(ErrorCode::invalid_argument, "output file name is null");
  std::ofstream os(file, mode);
  if (!os) fail(ErrorCode::io, std::string("cannot open ") + file + " for writing");
  return os;
}

void finish(std::ofstream& os, const char* file) {
  os.flush();
  if (!os) fail(ErrorCode::io, std::string("write failed: ") + file);
}

Grid1D make_grid(const kpp_grid* g) {
  const kpp_grid& grid = deref(g, "grid");
  return Grid1D::with_spacing(grid.x_lo, grid.x_hi, grid.dx);
}

InitialData make_data(const kpp_initial* in) {
  const kpp_initial& i = deref(in, "initial data");
  switch (i.kind) {
    case KPP_INIT_HEAVISIDE: return init::Heaviside{i.p[0]};
    case KPP_INIT_FRONT_LIKE: return init::FrontLike{i.p[0], i.p[1], i.p[2]};
    case KPP_INIT_BUMP: return init::CompactBump{i.p[0], i.p[1], i.p[2]};
    case KPP_INIT_CONSTANT: return init::Constant{i.p[0]};
    case KPP_INIT_CAPPED_EXP: return init::CappedExponential{i.p[0], i.p[1]};
    case KPP_INIT_OSCILLATING: return init::Oscillating{i.p[0], i.p[1], i.p[2]};
    case KPP_INIT_SAMPLES:
      if (!i.samples && i.n_samples > 0) fail(ErrorCode::invalid_argument, "sample array is null");
      return init::Samples{std::vector<double>(i.samples, i.samples + i.n_samples)};
  }
  fail(ErrorCode::invalid_argument, "unknown initial data kind");
}

SolveConfig make_config(const kpp_solve_config* c) {
  const kpp_solve_config& in = deref(c, "solve config");
  SolveConfig cfg;
  cfg.dt = in.dt;
  cfg.frame = in.moving_frame ? FrameKind::moving : FrameKind::fixed;
  cfg.mu = in.mu;
  cfg.store_stride = in.store_stride;
  cfg.margin = in.margin;
  cfg.margin_tol = in.margin_tol;
  cfg.substep = in.substep != 0;
  return cfg;
}

MeanEstimate from_c(const kpp_mean_estimate& m) {
  MeanEstimate e;
  e.r_min = m.r_min;
  e.stride = m.stride;
  e.horizon = {m.horizon_lo, m.horizon_hi};
  e.a_inf = m.a_inf;
  e.a_hat = m.a_hat;
  e.a_sup = m.a_sup;
  return e;
}

std::span<const double> span_of(const double* p, size_t n, const char* what) {
  if (!p && n > 0) fail(ErrorCode::invalid_argument, std::string(what) + " is null");
  return {p, n};
}

/// Rounds to the 12 significant digits used by every text artifact.
double r12(double v) {
  if (!std::isfinite(v)) return v;
  const std::string s = format_number(v);
  double out = v;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

std::vector<double> r12(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(r12(x));
  return out;
}

template <class T>
void put(T* out, T value) {
  if (out) *out = value;
}

}  // namespace

extern "C" {

const char* kpp_version(void) { return KPPLAB_VERSION; }

const char* kpp_last_error(void) { return g_last_error.c_str(); }

const char* kpp_status_name(kpp_status status) {
  switch (status) {
    case KPP_OK: return "ok";
    case KPP_E_INVALID_ARGUMENT: return "invalid_argument";
    case KPP_E_OUT_OF_RANGE: return "out_of_range";
    case KPP_E_STABILITY: return "stability_violation";
    case KPP_E_FRONT_MARGIN: return "front_margin";
    case KPP_E_NO_FRONT: return "no_front";
    case KPP_E_IO: return "io";
    case KPP_E_NUMERICAL: return "numerical";
    case KPP_E_INTERNAL: return "internal";
  }
  return "unknown";
}

void kpp_string_free(char* s) { std::free(s); }

kpp_status kpp_path_constant(double a, double t_lo, double t_hi, kpp_path** out) {
  return guarded([&] { deref(out, "out") = new kpp_path{CoefficientPath::constant(a, {t_lo, t_hi})}; });
}

kpp_status kpp_path_periodic(double mean, double amplitude, double period, double t_lo, double t_hi,
                             kpp_path** out) {
  return guarded([&] {
    deref(out, "out") = new kpp_path{CoefficientPath::periodic(mean, amplitude, period, {t_lo, t_hi})};
  });
}

kpp_status kpp_path_section5(double t_lo, double t_hi, kpp_path** out) {
  return guarded([&] { deref(out, "out") = new kpp_path{CoefficientPath::section5({t_lo, t_hi})}; });
}

kpp_status kpp_path_tabulated(double t0, double step, const double* values, size_t n, kpp_path** out) {
  return guarded([&] {
    auto v = span_of(values, n, "values");
    deref(out, "out") = new kpp_path{CoefficientPath::tabulated(t0, step, {v.begin(), v.end()})};
  });
}

kpp_status kpp_path_equilibrium(const kpp_noise* noise, double t_lo, double t_hi, size_t stride,
                                double t_trunc, kpp_path** out) {
  return guarded([&] {
    const auto& n = deref(noise, "noise").noise;
    deref(out, "out") = new kpp_path{equilibrium_path(n, {t_lo, t_hi}, stride, t_trunc)};
  });
}

kpp_status kpp_path_shifted(const kpp_path* path, double s, kpp_path** out) {
  return guarded([&] { deref(out, "out") = new kpp_path{deref(path, "path").path.shifted(s)}; });
}

void kpp_path_free(kpp_path* path) { delete path; }

kpp_status kpp_path_eval(const kpp_path* path, double t, double* out) {
  return guarded([&] { deref(out, "out") = deref(path, "path").path(t); });
}

kpp_status kpp_path_integral(const kpp_path* path, double s, double t, double* out) {
  return guarded([&] { deref(out, "out") = deref(path, "path").path.integral(s, t); });
}

kpp_status kpp_path_kind(const kpp_path* path, const char** out) {
  return guarded([&] { deref(out, "out") = to_string(deref(path, "path").path.kind()).data(); });
}

kpp_status kpp_windowed_mean(const kpp_path* path, double s, double t, double* out) {
  return guarded([&] { deref(out, "out") = windowed_mean(deref(path, "path").path, s, t); });
}

kpp_status kpp_path_write_csv(const kpp_path* path, const char* file, double t0, double t1, double dt) {
  return guarded([&] {
    const auto& p = deref(path, "path").path;
    auto os = open_out(file);
    write_csv(os, p, t0, t1, dt);
    finish(os, file);
  });
}

kpp_status kpp_estimate_means(const kpp_path* path, double r_min, double stride, double horizon_lo,
                              double horizon_hi, kpp_mean_estimate* out) {
  return guarded([&] {
    const auto e = estimate_means(deref(path, "path").path, r_min, stride, {horizon_lo, horizon_hi});
    deref(out, "out") = {e.r_min, e.stride, e.horizon.lo, e.horizon.hi, e.a_inf, e.a_hat, e.a_sup};
  });
}

void kpp_noise_params_default(kpp_noise_params* params) {
  if (!params) return;
  const NoiseParams d;
  *params = {d.seed, d.kappa, d.sigma, d.xi_max, d.step, d.range.lo, d.range.hi};
}

kpp_status kpp_noise_generate(const kpp_noise_params* params, kpp_noise** out) {
  return guarded([&] {
    const auto& p = deref(params, "noise params");
    NoiseParams np;
    np.seed = p.seed;
    np.kappa = p.kappa;
    np.sigma = p.sigma;
    np.xi_max = p.xi_max;
    np.step = p.step;
    np.range = {p.t_lo, p.t_hi};
    deref(out, "out") = new kpp_noise{NoisePath::generate(np)};
  });
}

void kpp_noise_free(kpp_noise* noise) { delete noise; }

kpp_status kpp_noise_eval(const kpp_noise* noise, double t, double* out) {
  return guarded([&] { deref(out, "out") = deref(noise, "noise").noise(t); });
}

kpp_status kpp_noise_integral(const kpp_noise* noise, double s, double t, double* out) {
  return guarded([&] { deref(out, "out") = deref(noise, "noise").noise.integral(s, t); });
}

kpp_status kpp_noise_write_csv(const kpp_noise* noise, const char* file) {
  return guarded([&] {
    const auto& n = deref(noise, "noise").noise;
    auto os = open_out(file);
    write_csv(os, n);
    finish(os, file);
  });
}

kpp_status kpp_default_truncation(const kpp_noise* noise, double tol, double* out) {
  return guarded([&] { deref(out, "out") = default_truncation(deref(noise, "noise").noise, tol); });
}

kpp_status kpp_random_equilibrium(const kpp_noise* noise, double t, double t_trunc, double* y,
                                  double* error_bound) {
  return guarded([&] {
    const auto s = random_equilibrium(deref(noise, "noise").noise, t, t_trunc);
    deref(y, "y") = s.Y;
    put(error_bound, s.error_bound);
  });
}

kpp_status kpp_real_noise_ode(double u0, const kpp_noise* noise, double t, double* out) {
  return guarded([&] { deref(out, "out") = real_noise_ode_solution(u0, deref(noise, "noise").noise, t); });
}

kpp_status kpp_logistic(double u0, const kpp_path* path, double t, double* out) {
  return guarded([&] { deref(out, "out") = logistic_solution(u0, deref(path, "path").path, t); });
}

void kpp_solve_config_default(kpp_solve_config* config) {
  if (!config) return;
  const SolveConfig d;
  *config = {d.dt, 0, d.mu, d.store_stride, d.margin, d.margin_tol, d.substep ? 1 : 0};
}

kpp_status kpp_solve(const kpp_path* path, const kpp_grid* grid, const kpp_initial* initial,
                     double t_end, const kpp_solve_config* config, kpp_traj** out) {
  return guarded([&] {
    auto& dst = deref(out, "out");
    const Field u0 = make_initial(make_data(initial), make_grid(grid));
    dst = new kpp_traj{solve(u0, deref(path, "path").path, t_end, make_config(config))};
  });
}

void kpp_traj_free(kpp_traj* traj) { delete traj; }

kpp_status kpp_traj_frame_count(const kpp_traj* traj, size_t* out) {
  return guarded([&] { deref(out, "out") = deref(traj, "trajectory").traj.frames.size(); });
}

kpp_status kpp_traj_grid(const kpp_traj* traj, double* x_lo, double* x_hi, size_t* n) {
  return guarded([&] {
    const Grid1D& g = deref(traj, "trajectory").traj.grid;
    put(x_lo, g.x_lo);
    put(x_hi, g.x_hi);
    put(n, g.n);
  });
}

namespace {
const Field& frame_of(const kpp_traj* traj, size_t frame) {
  const auto& t = deref(traj, "trajectory").traj;
  if (frame >= t.frames.size()) fail(ErrorCode::out_of_range, "frame index out of range");
  return t.frames[frame];
}
}  // namespace

kpp_status kpp_traj_time(const kpp_traj* traj, size_t frame, double* out) {
  return guarded([&] { deref(out, "out") = frame_of(traj, frame).t; });
}

kpp_status kpp_traj_values(const kpp_traj* traj, size_t frame, double* buf, size_t n) {
  return guarded([&] {
    const Field& f = frame_of(traj, frame);
    if (!buf || n != f.u.size()) fail(ErrorCode::invalid_argument, "buffer must hold exactly one frame");
    std::copy(f.u.begin(), f.u.end(), buf);
  });
}

kpp_status kpp_traj_write_csv(const kpp_traj* traj, const char* file) {
  return guarded([&] {
    const auto& t = deref(traj, "trajectory").traj;
    auto os = open_out(file);
    write_csv(os, t);
    finish(os, file);
  });
}

kpp_status kpp_traj_write_binary(const kpp_traj* traj, const char* file) {
  return guarded([&] {
    const auto& t = deref(traj, "trajectory").traj;
    auto os = open_out(file, std::ios::out | std::ios::binary);
    write_binary(os, t);
    finish(os, file);
  });
}

kpp_status kpp_traj_read_binary(const char* file, kpp_traj** out) {
  return guarded([&] {
    auto& dst = deref(out, "out");
    if (!file) fail(ErrorCode::invalid_argument, "input file name is null");
    std::ifstream is(file, std::ios::binary);
    if (!is) fail(ErrorCode::io, std::string("cannot open ") + file);
    dst = new kpp_traj{read_binary(is)};
  });
}

kpp_status kpp_front_position(const kpp_traj* traj, size_t frame, double level, double* x, int* found) {
  return guarded([&] {
    const auto pos = front_position(frame_of(traj, frame), level);
    deref(found, "found") = pos ? 1 : 0;
    put(x, pos.value_or(std::nan("")));
  });
}

kpp_status kpp_traj_write_fronts(const kpp_traj* traj, const char* file, const char* provenance) {
  return guarded([&] {
    const auto trace = track(deref(traj, "trajectory").traj, provenance ? provenance : "");
    auto os = open_out(file);
    write_csv(os, trace);
    finish(os, file);
  });
}

kpp_status kpp_estimate_speed(const kpp_traj* traj, double level, double t_a, double t_b, kpp_speed* out) {
  return guarded([&] {
    const double levels[] = {level};
    const auto trace = track(deref(traj, "trajectory").traj, levels);
    const auto s = estimate_speed(trace, t_a, t_b, 0);
    deref(out, "out") = {s.speed, s.std_error, s.t_a, s.t_b, s.residual_norm, s.endpoint_ratio, s.samples};
  });
}

kpp_status kpp_takeover(const kpp_traj* traj, const kpp_mean_estimate* means, double h,
                        const double* t_checks, size_t n_checks, double eps_outer, double eps_inner,
                        kpp_verdict* verdict, char** json) {
  return guarded([&] {
    const auto rep = takeover_verify(deref(traj, "trajectory").traj, from_c(deref(means, "means")), h,
                                     span_of(t_checks, n_checks, "check times"), eps_outer, eps_inner);
    deref(verdict, "verdict") = static_cast<kpp_verdict>(static_cast<int>(rep.verdict));
    if (json) {
      nlohmann::ordered_json j;
      j["c_hat"] = r12(rep.c_hat);
      j["h"] = r12(rep.h);
      j["eps_outer"] = rep.eps_outer;
      j["eps_inner"] = rep.eps_inner;
      j["verdict"] = to_string(rep.verdict);
      auto& checks = j["checks"] = nlohmann::ordered_json::array();
      for (const auto& c : rep.checks) {
        checks.push_back({{"t", r12(c.t)}, {"outer_sup", r12(c.outer_sup)}, {"inner_deficit", r12(c.inner_deficit)}, {"ok", c.ok}});
      }
      *json = dup_string(j.dump(2));
    }
  });
}

void kpp_probe_setup_default(kpp_probe_setup* setup) {
  if (!setup) return;
  const ProbeSetup d;
  *setup = {};
  setup->grid = {-100.0, 400.0, 0.1};
  setup->initial.kind = KPP_INIT_FRONT_LIKE;
  setup->initial.p[0] = 0.0;
  setup->initial.p[1] = 1.0;
  setup->initial.p[2] = 1.0;
  setup->front_like = 1;
  kpp_solve_config_default(&setup->config);
  setup->t_probe = d.t_probe;
  setup->eps_spread = d.eps_spread;
  setup->eps_vanish = d.eps_vanish;
  setup->threads = 0;
}

kpp_status kpp_probe_interval(const kpp_path* path, const kpp_probe_setup* setup, const double* c_grid,
                              size_t n_c, const double* shifts, size_t n_shifts, double* c_lo,
                              int* has_lo, double* c_hi, int* has_hi, char** json) {
  return guarded([&] {
    const auto& s = deref(setup, "probe setup");
    ProbeSetup ps;
    ps.grid = make_grid(&s.grid);
    ps.initial = make_data(&s.initial);
    ps.initial_class = s.front_like ? InitialClass::front_like : InitialClass::compact;
    ps.config = make_config(&s.config);
    ps.t_probe = s.t_probe;
    ps.eps_spread = s.eps_spread;
    ps.eps_vanish = s.eps_vanish;
    ps.threads = s.threads;
    const auto iv = probe_speed_interval(deref(path, "path").path, ps, span_of(c_grid, n_c, "speed grid"),
                                         span_of(shifts, n_shifts, "shift set"));
    put(c_lo, iv.c_lo);
    put(c_hi, iv.c_hi);
    put(has_lo, iv.has_lo ? 1 : 0);
    put(has_hi, iv.has_hi ? 1 : 0);
    if (json) *json = dup_string(to_json(iv));
  });
}

kpp_status kpp_subadditivity_check(const kpp_path* path, const kpp_grid* grid, const kpp_solve_config* config,
                                   double level, const double* times, size_t n_times, unsigned threads,
                                   kpp_subadditivity* out, char** json) {
  return guarded([&] {
    SubadditivitySetup ss;
    ss.grid = make_grid(grid);
    ss.config = make_config(config);
    ss.level = level;
    ss.threads = threads;
    const auto st = subadditivity_stability(deref(path, "path").path, span_of(times, n_times, "times"), ss);
    deref(out, "out") = {st.base.M_hat, st.base.arg_t, st.base.arg_s, st.refined.M_hat, st.relative_change,
                         st.flagged ? 1 : 0};
    if (json) {
      auto report = [](const SubadditivityReport& r) {
        nlohmann::ordered_json j;
        j["times"] = r12(r.times);
        j["M_hat"] = r12(r.M_hat);
        j["arg_t"] = r.arg_t;
        j["arg_s"] = r.arg_s;
        j["defects"] = r12(r.defects);
        return j;
      };
      nlohmann::ordered_json j;
      j["base"] = report(st.base);
      j["refined"] = report(st.refined);
      j["relative_change"] = r12(st.relative_change);
      j["flagged"] = st.flagged;
      *json = dup_string(j.dump(2));
    }
  });
}

kpp_status kpp_stability_check(const kpp_traj* traj, const kpp_path* path, double slack, kpp_stability* out,
                               const char* csv_file) {
  return guarded([&] {
    const auto& t = deref(traj, "trajectory").traj;
    if (t.frames.empty()) fail(ErrorCode::invalid_argument, "empty trajectory");
    const Field& f0 = t.frames.front();
    const auto bound = stability_bound(f0.min(), f0.max());
    const auto rep = verify_stability_decay(t, deref(path, "path").path, bound, slack);
    deref(out, "out") = {bound.M, rep.max_violation, rep.t_at_max, rep.slack, rep.passed ? 1 : 0,
                         rep.plateau ? 1 : 0};
    if (csv_file) {
      auto os = open_out(csv_file);
      write_csv(os, rep);
      finish(os, csv_file);
    }
  });
}

double kpp_slack(double dx, double dt) { return default_slack()(dx, dt); }

void kpp_bound_spec_default(kpp_bound_spec* spec) {
  if (!spec) return;
  const WaveOptions w;
  *spec = {1.0, 1.0, w.delta, w.d, w.r_min, w.horizon.lo, w.horizon.hi, 0.0};
}

kpp_status kpp_bound_create(const kpp_path* path, kpp_bound_kind kind, const kpp_bound_spec* spec,
                            kpp_bound** out) {
  return guarded([&] {
    auto& dst = deref(out, "out");
    const auto& p = deref(path, "path").path;
    const auto& s = deref(spec, "bound spec");
    if (kind == KPP_BOUND_SUPER) {
      dst = new kpp_bound{supersolution(p, s.mu), std::nullopt};
      return;
    }
    if (kind != KPP_BOUND_LOWER && kind != KPP_BOUND_CAPPED_LOWER) {
      fail(ErrorCode::invalid_argument, "unknown bound kind");
    }
    WaveOptions w;
    w.delta = s.delta;
    w.d = s.d;
    w.r_min = s.r_min;
    w.horizon = {s.horizon_lo, s.horizon_hi};
    WaveParams wp = make_wave_params(p, s.mu, s.mu_tilde, w);
    BoundCurve curve = kind == KPP_BOUND_LOWER ? lower_solution(p, wp, s.t0_shift) : capped_lower(p, wp, s.t0_shift);
    dst = new kpp_bound{std::move(curve), std::move(wp)};
  });
}

void kpp_bound_free(kpp_bound* bound) { delete bound; }

kpp_status kpp_bound_eval(const kpp_bound* bound, double t, double x, double* out) {
  return guarded([&] { deref(out, "out") = deref(bound, "bound").curve(t, x); });
}

kpp_status kpp_bound_validity(const kpp_bound* bound, double t, double* out) {
  return guarded([&] {
    const double v = deref(bound, "bound").curve.validity_start(t);
    deref(out, "out") = std::isinf(v) ? -HUGE_VAL : v;
  });
}

kpp_status kpp_bound_params(const kpp_bound* bound, double* delta, double* d, double* d_b) {
  return guarded([&] {
    const auto& b = deref(bound, "bound");
    put(delta, b.params ? b.params->delta : 0.0);
    put(d, b.params ? b.params->d : 0.0);
    put(d_b, b.params ? b.params->d_b : 0.0);
  });
}

kpp_status kpp_lower_threshold(double mu, double mu_tilde, double delta, double b_norm, double* out) {
  return guarded([&] { deref(out, "out") = lower_threshold(mu, mu_tilde, delta, b_norm); });
}

kpp_status kpp_certify_ordering(const kpp_traj* traj, const kpp_bound* bound, int relation, double slack,
                                kpp_certify* out, const char* csv_file) {
  return guarded([&] {
    if (relation != 0 && relation != 1) fail(ErrorCode::invalid_argument, "relation must be 0 or 1");
    const auto rep = certify_ordering(deref(traj, "trajectory").traj, deref(bound, "bound").curve,
                                      relation == 0 ? Relation::below : Relation::above, slack);
    deref(out, "out") = {rep.max_violation, rep.t_at_max, rep.slack, rep.passed ? 1 : 0};
    if (csv_file) {
      auto os = open_out(csv_file);
      write_csv(os, rep);
      finish(os, csv_file);
    }
  });
}

}  // extern "C"
