#include "kpplab/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>

#include "kpplab/error.hpp"

namespace kpplab {

Grid1D::Grid1D(double lo, double hi, std::size_t nodes) : x_lo(lo), x_hi(hi), n(nodes) {
  require(n >= 3, "grid: need at least 3 nodes");
  require(hi > lo, "grid: need x_hi > x_lo");
}

Grid1D Grid1D::with_spacing(double lo, double hi, double dx) {
  require(dx > 0.0 && hi > lo, "grid: invalid spacing or bounds");
  const auto cells = static_cast<std::size_t>(std::llround((hi - lo) / dx));
  return Grid1D(lo, lo + static_cast<double>(cells) * dx, cells + 1);
}

double Field::min() const { return *std::min_element(u.begin(), u.end()); }
double Field::max() const { return *std::max_element(u.begin(), u.end()); }

double Field::at(double x) const {
  const double s = std::clamp(grid.index_of(x), 0.0, static_cast<double>(grid.n - 1));
  const auto i = std::min(static_cast<std::size_t>(s), grid.n - 2);
  const double w = s - static_cast<double>(i);
  return u[i] + w * (u[i + 1] - u[i]);
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Field make_initial(const InitialData& data, const Grid1D& grid) {
  Field f{grid, std::vector<double>(grid.n, 0.0), 0.0};
  const double dx = grid.dx();
  std::visit(
      Overloaded{
          [&](const init::Heaviside& h) {
            for (std::size_t i = 0; i < grid.n; ++i) {
              f.u[i] = std::clamp(0.5 - (grid.x(i) - h.x0) / dx, 0.0, 1.0);
            }
          },
          [&](const init::FrontLike& p) {
            require(p.plateau > 0.0 && p.width > 0.0, "front-like data: need positive plateau and width");
            for (std::size_t i = 0; i < grid.n; ++i) {
              f.u[i] = p.plateau * std::clamp(1.0 - (grid.x(i) - p.x0) / p.width, 0.0, 1.0);
            }
          },
          [&](const init::CompactBump& b) {
            require(b.height > 0.0 && b.half_width > 0.0, "bump: need positive height and half width");
            require(b.center - b.half_width >= grid.x_lo && b.center + b.half_width <= grid.x_hi,
                    "bump: support outside grid");
            for (std::size_t i = 0; i < grid.n; ++i) {
              const double z = (grid.x(i) - b.center) / b.half_width;
              f.u[i] = std::abs(z) < 1.0 ? b.height * (1.0 - z * z) : 0.0;
            }
          },
          [&](const init::Constant& c) {
            require(c.value >= 0.0, "constant data: negative plateau");
            std::fill(f.u.begin(), f.u.end(), c.value);
          },
          [&](const init::CappedExponential& e) {
            require(e.mu > 0.0, "capped exponential: need mu > 0");
            for (std::size_t i = 0; i < grid.n; ++i) {
              f.u[i] = std::min(1.0, std::exp(-e.mu * (grid.x(i) - e.x0)));
            }
          },
          [&](const init::Oscillating& o) {
            require(o.mid - std::abs(o.amp) >= 0.0 && o.wavelength > 0.0,
                    "oscillating data: need mid >= |amp| and positive wavelength");
            for (std::size_t i = 0; i < grid.n; ++i) {
              f.u[i] = o.mid + o.amp * std::cos(2.0 * std::numbers::pi * grid.x(i) / o.wavelength);
            }
          },
          [&](const init::Samples& s) {
            require(s.values.size() == grid.n, "sample data: size does not match grid");
            for (double v : s.values) require(v >= 0.0 && std::isfinite(v), "sample data: negative or non-finite value");
            f.u = s.values;
          },
      },
      data);
  return f;
}

const Field& Trajectory::frame_at(double t, double tol) const {
  for (const Field& f : frames) {
    if (std::abs(f.t - t) <= tol) return f;
  }
  fail(ErrorCode::out_of_range, "trajectory has no stored frame at t=" + format_number(t));
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const Field& f : frames) out.push_back(f.t);
  return out;
}

double max_reaction_step(double a_max, double u_max) {
  return 0.5 / (a_max * std::max(1.0, 2.0 * u_max - 1.0));
}

namespace {

/// Backward-Euler operator (I - r D2) with reflecting ends, factorized once.
class ImplicitDiffusion {
 public:
  ImplicitDiffusion(std::size_t n, double r) : r_(r), cp_(n), inv_(n) {
    const double b = 1.0 + 2.0 * r;
    inv_[0] = 1.0 / b;
    cp_[0] = -2.0 * r * inv_[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double a = (i == n - 1) ? -2.0 * r : -r;
      inv_[i] = 1.0 / (b - a * cp_[i - 1]);
      cp_[i] = (i == n - 1) ? 0.0 : -r * inv_[i];
    }
  }

  void solve_in_place(std::vector<double>& d) const {
    const std::size_t n = d.size();
    d[0] *= inv_[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double a = (i == n - 1) ? -2.0 * r_ : -r_;
      d[i] = (d[i] - a * d[i - 1]) * inv_[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= cp_[i] * d[i + 1];
  }

 private:
  double r_;
  std::vector<double> cp_, inv_;
};

struct StepLimits {
  double a_max;
  double u_max;
  double reaction_product;  // dt * a_max * max(1, 2 u_max - 1)
  double cfl;               // moving frame only
};

StepLimits limits(const Field& field, const CoefficientPath& path, double dt,
                  const SolveConfig& config) {
  StepLimits lim{};
  lim.a_max = path.max_over(field.t, field.t + dt);
  lim.u_max = field.max();
  lim.reaction_product = dt * lim.a_max * std::max(1.0, 2.0 * lim.u_max - 1.0);
  if (config.frame == FrameKind::moving) {
    lim.cfl = (config.mu * config.mu + lim.a_max) / config.mu * dt / field.grid.dx();
  }
  return lim;
}

bool within(const StepLimits& lim) {
  return lim.reaction_product <= 0.5 * (1.0 + 1e-12) && lim.cfl <= 1.0 + 1e-12;
}

void advance(Field& f, const CoefficientPath& path, double dt, const SolveConfig& config,
             const ImplicitDiffusion& diffusion) {
  const double A = path.integral(f.t, f.t + dt);
  auto& u = f.u;
  for (double& v : u) v += A * v * (1.0 - v);

  if (config.frame == FrameKind::moving) {
    // v_t = c v_x with c > 0: upwind from the right, reflecting right end.
    const double lambda = (config.mu * config.mu * dt + A) / (config.mu * f.grid.dx());
    const std::size_t n = u.size();
    for (std::size_t i = 0; i + 1 < n; ++i) u[i] += lambda * (u[i + 1] - u[i]);
  }
  diffusion.solve_in_place(u);
  f.t += dt;
}

void check_config(const SolveConfig& config) {
  require(config.dt > 0.0, "solver: dt must be positive");
  require(config.frame == FrameKind::fixed || config.mu > 0.0, "solver: moving frame needs mu > 0");
  require(config.store_stride >= 1, "solver: store stride must be at least 1");
  require(config.margin >= 0.0, "solver: margin must be nonnegative");
}

[[noreturn]] void report_violation(const StepLimits& lim, double t, double dt) {
  fail(ErrorCode::stability_violation,
       "step at t=" + format_number(t) + " with dt=" + format_number(dt) +
           " violates monotone bounds: dt*a_max*max(1,2u_max-1)=" +
           format_number(lim.reaction_product) + " (limit 0.5, a_max=" +
           format_number(lim.a_max) + ", u_max=" + format_number(lim.u_max) +
           "), upwind CFL=" + format_number(lim.cfl) + " (limit 1)");
}

/// Tracks variation inside the boundary margin zones.
class MarginGuard {
 public:
  MarginGuard(const Field& initial, const SolveConfig& config) : margin_(config.margin), tol_(config.margin_tol) {
    if (margin_ <= 0.0) return;
    const Grid1D& g = initial.grid;
    const auto k = static_cast<std::size_t>(std::floor(margin_ / g.dx()));
    require(2 * k + 1 < g.n, "solver: margin zones cover the whole grid");
    left_end_ = k + 1;
    right_begin_ = g.n - 1 - k;
    base_left_ = variation(initial.u, 0, left_end_);
    base_right_ = variation(initial.u, right_begin_, g.n);
  }

  void check(const Field& f) const {
    if (margin_ <= 0.0) return;
    const double vl = variation(f.u, 0, left_end_);
    const double vr = variation(f.u, right_begin_, f.u.size());
    if (vl > std::max(tol_, base_left_ * (1.0 + 1e-9))) breach("left", vl, f.t);
    if (vr > std::max(tol_, base_right_ * (1.0 + 1e-9))) breach("right", vr, f.t);
  }

 private:
  static double variation(const std::vector<double>& u, std::size_t b, std::size_t e) {
    auto [mn, mx] = std::minmax_element(u.begin() + static_cast<std::ptrdiff_t>(b),
                                        u.begin() + static_cast<std::ptrdiff_t>(e));
    return *mx - *mn;
  }
  [[noreturn]] void breach(const char* side, double v, double t) const {
    fail(ErrorCode::front_margin, std::string("front entered the ") + side +
                                      " safety margin at t=" + format_number(t) +
                                      " (variation " + format_number(v) + " in a zone of width " +
                                      format_number(margin_) + ")");
  }

  double margin_, tol_;
  std::size_t left_end_ = 0, right_begin_ = 0;
  double base_left_ = 0.0, base_right_ = 0.0;
};

void check_finite(const Field& f) {
  for (double v : f.u) {
    if (!std::isfinite(v)) fail(ErrorCode::numerical, "non-finite value at t=" + format_number(f.t));
  }
}

}  // namespace

Field step(const Field& field, const CoefficientPath& path, double dt, const SolveConfig& config) {
  check_config(config);
  require(dt > 0.0, "step: dt must be positive");
  const StepLimits lim = limits(field, path, dt, config);
  if (!within(lim)) report_violation(lim, field.t, dt);
  const double dx = field.grid.dx();
  ImplicitDiffusion diffusion(field.grid.n, dt / (dx * dx));
  Field out = field;
  advance(out, path, dt, config, diffusion);
  return out;
}

Trajectory solve(const Field& initial, const CoefficientPath& path, double t_end,
                 const SolveConfig& config) {
  check_config(config);
  require(t_end > 0.0, "solve: t_end must be positive");
  require(path.range().lo <= initial.t + 1e-9 && path.range().hi >= initial.t + t_end - 1e-9,
          "solve: path does not cover [0, t_end]", ErrorCode::out_of_range);
  for (double v : initial.u) require(std::isfinite(v) && v >= 0.0, "solve: initial data must be finite and nonnegative");

  const auto n_steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t_end / config.dt - 1e-9)));
  const double h = t_end / static_cast<double>(n_steps);
  const double dx = initial.grid.dx();
  const double t0 = initial.t;

  std::map<std::size_t, ImplicitDiffusion> diffusions;
  auto diffusion_for = [&](std::size_t parts) -> const ImplicitDiffusion& {
    auto it = diffusions.find(parts);
    if (it == diffusions.end()) {
      const double sub = h / static_cast<double>(parts);
      it = diffusions.emplace(parts, ImplicitDiffusion(initial.grid.n, sub / (dx * dx))).first;
    }
    return it->second;
  };

  Trajectory traj;
  traj.grid = initial.grid;
  traj.frame = config.frame;
  traj.mu = config.frame == FrameKind::moving ? config.mu : 0.0;
  traj.frames.push_back(initial);

  MarginGuard guard(initial, config);
  const std::size_t check_every = std::max<std::size_t>(1, std::min<std::size_t>(config.store_stride, 50));

  Field cur = initial;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t_next = t0 + static_cast<double>(k + 1) * h;
    const double span = t_next - cur.t;
    StepLimits lim = limits(cur, path, span, config);
    std::size_t parts = 1;
    if (!within(lim)) {
      if (!config.substep) report_violation(lim, cur.t, span);
      const double need = std::max(lim.reaction_product / 0.5, lim.cfl);
      parts = static_cast<std::size_t>(std::ceil(need * (1.0 + 1e-9)));
    }
    if (parts == 1) {
      advance(cur, path, span, config, diffusion_for(1));
    } else {
      const double sub = span / static_cast<double>(parts);
      for (std::size_t p = 0; p < parts; ++p) {
        lim = limits(cur, path, sub, config);
        if (!within(lim)) report_violation(lim, cur.t, sub);
        advance(cur, path, sub, config, diffusion_for(parts));
      }
    }
    cur.t = t_next;

    const bool last = (k + 1 == n_steps);
    if ((k + 1) % check_every == 0 || last) {
      check_finite(cur);
      guard.check(cur);
    }
    if ((k + 1) % config.store_stride == 0 || last) traj.frames.push_back(cur);
  }
  return traj;
}

Trajectory solve_moving_frame(const Field& initial, const CoefficientPath& path, double mu,
                              double t_end, SolveConfig config) {
  require(mu > 0.0, "solve_moving_frame: mu must be positive");
  config.frame = FrameKind::moving;
  config.mu = mu;
  return solve(initial, path, t_end, config);
}

double recommend_x_hi(double t_end, double a_sup_est, double margin) {
  return 2.0 * std::sqrt(a_sup_est) * t_end * 1.1 + margin;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  os << "# grid x_lo=" << format_number(traj.grid.x_lo) << " x_hi=" << format_number(traj.grid.x_hi)
     << " n=" << traj.grid.n << " frame=" << (traj.frame == FrameKind::moving ? "moving" : "fixed");
  if (traj.frame == FrameKind::moving) os << " mu=" << format_number(traj.mu);
  os << "\nt";
  for (std::size_t i = 0; i < traj.grid.n; ++i) os << ',' << format_number(traj.grid.x(i));
  os << '\n';
  for (const Field& f : traj.frames) {
    os << format_number(f.t);
    for (double v : f.u) os << ',' << format_number(v);
    os << '\n';
  }
}

namespace {

void put_f64(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) fail(ErrorCode::io, "KPP1: truncated stream");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_binary(std::ostream& os, const Trajectory& traj) {
  os.write("KPP1", 4);
  put_f64(os, traj.grid.x_lo);
  put_f64(os, traj.grid.x_hi);
  put_f64(os, static_cast<double>(traj.grid.n));
  put_f64(os, static_cast<double>(traj.frames.size()));
  for (const Field& f : traj.frames) {
    put_f64(os, f.t);
    for (double v : f.u) put_f64(os, v);
  }
}

Trajectory read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "KPP1", 4) != 0) fail(ErrorCode::io, "KPP1: bad magic");
  Trajectory traj;
  const double lo = get_f64(is);
  const double hi = get_f64(is);
  const auto n = static_cast<std::size_t>(get_f64(is));
  const auto frames = static_cast<std::size_t>(get_f64(is));
  traj.grid = Grid1D(lo, hi, n);
  traj.frames.reserve(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    Field f{traj.grid, std::vector<double>(n), get_f64(is)};
    for (double& v : f.u) v = get_f64(is);
    traj.frames.push_back(std::move(f));
  }
  return traj;
}

}  // namespace kpplab
