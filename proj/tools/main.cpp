// kpplab command-line runner. Links only the C interface.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "kpplab/kpplab.h"

namespace kppcli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

enum class Verdict { confirmed = 0, inconclusive = 1, violated = 2 };

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::confirmed: return 0;
    case Verdict::inconclusive: return 3;
    case Verdict::violated: return 4;
  }
  return 1;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::confirmed: return "confirmed";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::violated: return "violated";
  }
  return "?";
}

Verdict worst(Verdict a, Verdict b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

/// Library failure other than a bad argument; maps to exit code 1.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(kpp_status st, const char* what) {
  if (st == KPP_OK) return;
  std::string msg = std::string(what) + ": " + kpp_status_name(st) + ": " + kpp_last_error();
  if (st == KPP_E_INVALID_ARGUMENT) throw UsageError(msg);
  throw RuntimeError(msg);
}

struct PathDel {
  void operator()(kpp_path* p) const { kpp_path_free(p); }
};
struct NoiseDel {
  void operator()(kpp_noise* p) const { kpp_noise_free(p); }
};
struct TrajDel {
  void operator()(kpp_traj* p) const { kpp_traj_free(p); }
};
struct BoundDel {
  void operator()(kpp_bound* p) const { kpp_bound_free(p); }
};
using PathPtr = std::unique_ptr<kpp_path, PathDel>;
using NoisePtr = std::unique_ptr<kpp_noise, NoiseDel>;
using TrajPtr = std::unique_ptr<kpp_traj, TrajDel>;
using BoundPtr = std::unique_ptr<kpp_bound, BoundDel>;

/// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  kpp_string_free(s);
  return out;
}

/// Value rounded to 12 significant digits for JSON output.
Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  const std::string s = fmt(v);
  double out = v;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

Json num_list(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

struct Options {
  unsigned threads = 0;
};

/// Writes artifacts into the output directory, each stamped with the
/// version, command, seed and resolved configuration.
class Artifacts {
 public:
  Artifacts(fs::path dir, const Config& config) : dir_(std::move(dir)), config_(config) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw RuntimeError("cannot create output directory " + dir_.string() + ": " + ec.message());
    std::ofstream os(dir_ / "config.txt");
    os << "# kpplab " << kpp_version() << " command=" << config_.command() << "\n" << config_.render();
    if (!os) throw RuntimeError("cannot write " + (dir_ / "config.txt").string());
  }

  void json(const std::string& name, const Json& result, Verdict verdict) const {
    Json j;
    j["version"] = kpp_version();
    j["command"] = config_.command();
    j["seed"] = config_.str("noise.seed");
    j["verdict"] = verdict_name(verdict);
    Json cfg = Json::object();
    for (const auto& [k, v] : config_.values()) cfg[k] = v;
    j["config"] = std::move(cfg);
    j["result"] = result;
    write_text(name, j.dump(2) + "\n");
  }

  /// Runs a library writer into a scratch file and prepends the header.
  void csv(const std::string& name, const std::function<kpp_status(const char*)>& writer) const {
    const fs::path tmp = dir_ / (name + ".part");
    check(writer(tmp.string().c_str()), name.c_str());
    std::ifstream in(tmp, std::ios::binary);
    std::stringstream body;
    body << in.rdbuf();
    in.close();
    fs::remove(tmp);
    std::string header = "# kpplab " + std::string(kpp_version()) + " command=" + config_.command() +
                         " seed=" + config_.str("noise.seed") + "\n# config:";
    for (const auto& [k, v] : config_.values()) header += " " + k + "=" + v;
    write_text(name, header + "\n" + body.str());
  }

  const fs::path& dir() const { return dir_; }

 private:
  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream os(dir_ / name, std::ios::binary);
    os << text;
    if (!os) throw RuntimeError("cannot write " + (dir_ / name).string());
  }

  fs::path dir_;
  const Config& config_;
};

struct Outcome {
  Json result;
  Verdict verdict = Verdict::confirmed;
};

// ---- shared builders ----

std::vector<double> read_tabulated(const std::string& file, double& t0, double& step) {
  std::ifstream in(file);
  if (!in) throw UsageError("path.file: cannot read " + file);
  std::vector<double> ts, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw UsageError("path.file: expected t,value rows");
    ts.push_back(parse_number(std::string_view(line).substr(0, comma), "path.file"));
    vs.push_back(parse_number(std::string_view(line).substr(comma + 1), "path.file"));
  }
  if (ts.size() < 2) throw UsageError("path.file: need at least two samples");
  t0 = ts.front();
  step = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (std::abs(ts[i] - (t0 + static_cast<double>(i) * step)) > 1e-9 * std::max(1.0, std::abs(ts[i]))) {
      throw UsageError("path.file: sample times are not uniformly spaced");
    }
  }
  return vs;
}

/// Coefficient path covering [span_lo, span_hi].
PathPtr build_path(const Config& c, double span_lo, double span_hi) {
  const std::string& kind = c.str("path.kind");
  kpp_path* p = nullptr;
  const double lo = span_lo - 1.0;
  const double hi = span_hi + 1.0;
  if (kind == "constant") {
    check(kpp_path_constant(c.num("path.a"), lo, hi, &p), "path");
  } else if (kind == "periodic") {
    check(kpp_path_periodic(c.num("path.mean"), c.num("path.amplitude"), c.num("path.period"), lo, hi, &p),
          "path");
  } else if (kind == "section5") {
    check(kpp_path_section5(lo, hi, &p), "path");
  } else if (kind == "tabulated") {
    double t0 = 0.0, step = 0.0;
    const auto values = read_tabulated(c.str("path.file"), t0, step);
    check(kpp_path_tabulated(t0, step, values.data(), values.size(), &p), "path");
  } else if (kind == "equilibrium") {
    kpp_noise_params np;
    kpp_noise_params_default(&np);
    const long long seed = c.integer("noise.seed");
    if (seed < 0) throw UsageError("noise.seed must be nonnegative");
    np.seed = static_cast<std::uint64_t>(seed);
    np.kappa = c.num("noise.kappa");
    np.sigma = c.num("noise.sigma");
    np.xi_max = c.num("noise.xi_max");
    np.step = c.num("noise.step");
    if (!(np.xi_max > 0.0 && np.xi_max < 1.0)) throw UsageError("noise.xi_max must lie in (0, 1)");
    // History long enough for the default truncation at the worst admissible noise floor.
    const double g = 1.0 - np.xi_max;
    const double history = (std::log(1e8) - std::log(g)) / g + 2.0;
    np.t_lo = lo - history;
    np.t_hi = hi + 1.0;
    kpp_noise* n = nullptr;
    check(kpp_noise_generate(&np, &n), "noise");
    NoisePtr noise(n);
    const long long stride = c.integer("noise.stride");
    if (stride < 1) throw UsageError("noise.stride must be at least 1");
    check(kpp_path_equilibrium(noise.get(), lo, hi, static_cast<std::size_t>(stride), 0.0, &p), "path");
  } else {
    throw UsageError("path.kind: unknown kind '" + kind + "'");
  }
  return PathPtr(p);
}

PathPtr shifted(const kpp_path* path, double s) {
  kpp_path* p = nullptr;
  check(kpp_path_shifted(path, s, &p), "shift");
  return PathPtr(p);
}

kpp_grid build_grid(const Config& c) { return {c.num("grid.x_lo"), c.num("grid.x_hi"), c.num("grid.dx")}; }

kpp_initial build_initial(const Config& c) {
  kpp_initial in{};
  const std::string& kind = c.str("init.kind");
  if (kind == "heaviside") {
    in.kind = KPP_INIT_HEAVISIDE;
    in.p[0] = c.num("init.x0");
  } else if (kind == "front_like") {
    in.kind = KPP_INIT_FRONT_LIKE;
    in.p[0] = c.num("init.x0");
    in.p[1] = c.num("init.width");
    in.p[2] = c.num("init.plateau");
  } else if (kind == "bump") {
    in.kind = KPP_INIT_BUMP;
    in.p[0] = c.num("init.center");
    in.p[1] = c.num("init.half_width");
    in.p[2] = c.num("init.height");
  } else if (kind == "constant") {
    in.kind = KPP_INIT_CONSTANT;
    in.p[0] = c.num("init.value");
  } else if (kind == "oscillating") {
    in.kind = KPP_INIT_OSCILLATING;
    in.p[0] = c.num("init.mid");
    in.p[1] = c.num("init.amp");
    in.p[2] = c.num("init.wavelength");
  } else {
    throw UsageError("init.kind: unknown kind '" + kind + "'");
  }
  return in;
}

kpp_solve_config build_solver(const Config& c) {
  kpp_solve_config s;
  kpp_solve_config_default(&s);
  s.dt = c.num("solver.dt");
  const long long stride = c.integer("solver.store_stride");
  if (stride < 1) throw UsageError("solver.store_stride must be at least 1");
  s.store_stride = static_cast<std::size_t>(stride);
  s.margin = c.num("solver.margin");
  s.margin_tol = c.num("solver.margin_tol");
  return s;
}

TrajPtr run_solver(const kpp_path* path, const kpp_grid& grid, const kpp_initial& init, double t_end,
                   const kpp_solve_config& cfg) {
  kpp_traj* t = nullptr;
  check(kpp_solve(path, &grid, &init, t_end, &cfg, &t), "solve");
  return TrajPtr(t);
}

Json means_json(const kpp_mean_estimate& m) {
  return Json{{"r_min", num(m.r_min)},         {"stride", num(m.stride)},
              {"horizon", num_list({m.horizon_lo, m.horizon_hi})}, {"a_inf", num(m.a_inf)},
              {"a_hat", num(m.a_hat)},         {"a_sup", num(m.a_sup)}};
}

// ---- commands ----

Outcome cmd_mean(const Config& c, const Options&, const Artifacts* out) {
  const auto [lo, hi] = c.range("horizon");
  auto path = build_path(c, lo, hi);
  kpp_mean_estimate m{};
  check(kpp_estimate_means(path.get(), c.num("mean.r_min"), c.num("mean.stride"), lo, hi, &m), "mean");
  Outcome o;
  o.result = means_json(m);
  const bool ordered = m.a_inf <= m.a_hat && m.a_hat <= m.a_sup && m.a_inf > 0.0;
  o.result["ordered"] = ordered;
  o.verdict = ordered ? Verdict::confirmed : Verdict::violated;
  if (out) {
    out->csv("path.csv", [&](const char* f) { return kpp_path_write_csv(path.get(), f, lo, hi, c.num("mean.stride")); });
    out->json("mean.json", o.result, o.verdict);
  }
  return o;
}

Outcome cmd_takeover(const Config& c, const Options&, const Artifacts* out) {
  const auto [lo, hi] = c.range("horizon");
  const double T = hi - lo;
  auto base = build_path(c, lo, hi);
  auto path = shifted(base.get(), lo);
  const kpp_grid grid = build_grid(c);
  const auto traj = run_solver(path.get(), grid, build_initial(c), T, build_solver(c));

  const double t_a = c.has("fit.t_a") ? c.num("fit.t_a") : 0.4 * T;
  const double t_b = c.has("fit.t_b") ? c.num("fit.t_b") : T;
  kpp_speed sp{};
  check(kpp_estimate_speed(traj.get(), c.num("fit.level"), t_a, t_b, &sp), "speed fit");

  kpp_mean_estimate m{};
  check(kpp_estimate_means(path.get(), std::min(c.num("mean.r_min"), T), c.num("mean.stride"), 0.0, T, &m),
        "mean");
  std::vector<double> checks = c.has("takeover.checks") ? c.list("takeover.checks")
                                                          : std::vector<double>{0.5 * T, 0.75 * T, T};
  // Check times must be stored frames; snap to the storage grid.
  const double unit = c.num("solver.dt") * static_cast<double>(c.integer("solver.store_stride"));
  for (double& t : checks) t = std::min(T, std::round(t / unit) * unit);
  kpp_verdict v{};
  char* js = nullptr;
  check(kpp_takeover(traj.get(), &m, c.num("takeover.h"), checks.data(), checks.size(),
                     c.num("takeover.eps_outer"), c.num("takeover.eps_inner"), &v, &js),
        "takeover");
  Outcome o;
  o.result["speed"] = {{"speed", num(sp.speed)},           {"std_error", num(sp.std_error)},
                       {"t_a", num(sp.t_a)},               {"t_b", num(sp.t_b)},
                       {"residual_norm", num(sp.residual_norm)}, {"endpoint_ratio", num(sp.endpoint_ratio)},
                       {"samples", sp.samples}};
  o.result["means"] = means_json(m);
  o.result["takeover"] = Json::parse(take(js));
  o.verdict = static_cast<Verdict>(static_cast<int>(v));
  if (out) {
    out->csv("fronts.csv", [&](const char* f) { return kpp_traj_write_fronts(traj.get(), f, nullptr); });
    out->json("takeover.json", o.result, o.verdict);
  }
  return o;
}

Outcome cmd_interval(const Config& c, const Options& opt, const Artifacts* out) {
  const double t_probe = c.num("interval.t_probe");
  const double span = c.num("interval.shift_span");
  const long long count = c.integer("interval.shift_count");
  if (count < 1) throw UsageError("interval.shift_count must be at least 1");
  auto path = build_path(c, 0.0, t_probe + span);

  std::vector<double> speeds;
  const double c_min = c.num("interval.c_min"), c_max = c.num("interval.c_max"), c_step = c.num("interval.c_step");
  if (!(c_step > 0.0 && c_max >= c_min)) throw UsageError("interval: need c_step > 0 and c_max >= c_min");
  const auto n_c = static_cast<long long>(std::floor((c_max - c_min) / c_step + 1e-9));
  for (long long i = 0; i <= n_c; ++i) speeds.push_back(c_min + static_cast<double>(i) * c_step);
  std::vector<double> shifts;
  for (long long i = 0; i < count; ++i) shifts.push_back(span * static_cast<double>(i) / static_cast<double>(count));

  kpp_probe_setup ps;
  kpp_probe_setup_default(&ps);
  ps.grid = build_grid(c);
  ps.initial = build_initial(c);
  ps.front_like = ps.initial.kind == KPP_INIT_BUMP ? 0 : 1;
  ps.config = build_solver(c);
  ps.t_probe = t_probe;
  ps.eps_spread = c.num("interval.eps_spread");
  ps.eps_vanish = c.num("interval.eps_vanish");
  ps.threads = opt.threads;
  double c_lo = 0, c_hi = 0;
  int has_lo = 0, has_hi = 0;
  char* js = nullptr;
  check(kpp_probe_interval(path.get(), &ps, speeds.data(), speeds.size(), shifts.data(), shifts.size(), &c_lo,
                           &has_lo, &c_hi, &has_hi, &js),
        "interval");
  Outcome o;
  o.result = Json::parse(take(js));
  o.result["initial_class"] = ps.front_like ? "front_like" : "compact";
  const bool monotone = o.result.value("monotone", false);
  o.verdict = (has_lo && has_hi && monotone) ? Verdict::confirmed : Verdict::inconclusive;
  if (out) out->json("interval.json", o.result, o.verdict);
  return o;
}

Outcome cmd_stability(const Config& c, const Options&, const Artifacts* out) {
  const auto [lo, hi] = c.range("horizon");
  auto base = build_path(c, lo, hi);
  auto path = shifted(base.get(), lo);
  const auto traj = run_solver(path.get(), build_grid(c), build_initial(c), hi - lo, build_solver(c));
  kpp_stability st{};
  const fs::path tmp = out ? out->dir() / "stability.csv.raw" : fs::path();
  check(kpp_stability_check(traj.get(), path.get(), c.num("stability.slack"), &st,
                            out ? tmp.string().c_str() : nullptr),
        "stability");
  Outcome o;
  o.result = {{"M", num(st.M)},           {"max_violation", num(st.max_violation)},
              {"t_at_max", num(st.t_at_max)}, {"slack", num(st.slack)},
              {"passed", st.passed != 0}, {"plateau", st.plateau != 0}};
  o.verdict = st.passed ? Verdict::confirmed : st.plateau ? Verdict::inconclusive : Verdict::violated;
  if (out) {
    out->csv("stability.csv", [&](const char* f) {
      std::error_code ec;
      fs::rename(tmp, f, ec);
      return ec ? KPP_E_IO : KPP_OK;
    });
    out->json("stability.json", o.result, o.verdict);
  }
  return o;
}

Outcome cmd_certify(const Config& c, const Options&, const Artifacts* out) {
  const auto [lo, hi] = c.range("horizon");
  if (lo != 0.0) throw UsageError("certify: horizon must start at 0");
  const auto [b_lo, b_hi] = c.range("certify.b_horizon");
  auto path = build_path(c, std::min(0.0, b_lo), std::max(hi, b_hi));
  kpp_bound_spec spec;
  kpp_bound_spec_default(&spec);
  spec.mu = c.num("certify.mu");
  spec.mu_tilde = c.num("certify.mu_tilde");
  spec.delta = c.num("certify.delta");
  spec.d = c.num("certify.d");
  spec.r_min = c.num("certify.r_min");
  spec.horizon_lo = b_lo;
  spec.horizon_hi = b_hi;
  kpp_bound *up_raw = nullptr, *low_raw = nullptr;
  check(kpp_bound_create(path.get(), KPP_BOUND_SUPER, &spec, &up_raw), "upper bound");
  BoundPtr upper(up_raw);
  check(kpp_bound_create(path.get(), KPP_BOUND_CAPPED_LOWER, &spec, &low_raw), "lower bound");
  BoundPtr lower(low_raw);
  double delta = 0, d = 0, d_b = 0;
  check(kpp_bound_params(lower.get(), &delta, &d, &d_b), "bound parameters");

  kpp_initial init{};
  init.kind = KPP_INIT_CAPPED_EXP;
  init.p[0] = spec.mu;
  init.p[1] = 0.0;
  const kpp_grid grid = build_grid(c);
  const auto traj = run_solver(path.get(), grid, init, hi, build_solver(c));
  const double slack = kpp_slack(grid.dx, c.num("solver.dt")) + c.num("certify.tolerance");

  const fs::path dir = out ? out->dir() : fs::path();
  const fs::path tmp_up = dir / "certify_upper.csv.raw", tmp_low = dir / "certify_lower.csv.raw";
  kpp_certify cu{}, cl{};
  check(kpp_certify_ordering(traj.get(), upper.get(), 0, slack, &cu, out ? tmp_up.string().c_str() : nullptr),
        "certify upper");
  check(kpp_certify_ordering(traj.get(), lower.get(), 1, slack, &cl, out ? tmp_low.string().c_str() : nullptr),
        "certify lower");
  auto rep = [](const kpp_certify& r) {
    return Json{{"max_violation", num(r.max_violation)}, {"t_at_max", num(r.t_at_max)}, {"passed", r.passed != 0}};
  };
  Outcome o;
  o.result = {{"mu", num(spec.mu)}, {"mu_tilde", num(spec.mu_tilde)}, {"delta", num(delta)}, {"d", num(d)},
              {"d_b", num(d_b)},    {"slack", num(slack)},          {"upper", rep(cu)},   {"lower", rep(cl)}};
  o.verdict = (cu.passed && cl.passed) ? Verdict::confirmed : Verdict::violated;
  if (out) {
    for (const auto& [name, tmp] : {std::pair{"certify_upper.csv", tmp_up}, std::pair{"certify_lower.csv", tmp_low}}) {
      out->csv(name, [&](const char* f) {
        std::error_code ec;
        fs::rename(tmp, f, ec);
        return ec ? KPP_E_IO : KPP_OK;
      });
    }
    out->json("certify.json", o.result, o.verdict);
  }
  return o;
}

Outcome cmd_subadd(const Config& c, const Options& opt, const Artifacts* out) {
  const auto times = c.list("subadd.times");
  const double t_max = *std::max_element(times.begin(), times.end());
  auto path = build_path(c, 0.0, 2.0 * t_max + 1.0);
  const kpp_grid grid = build_grid(c);
  const kpp_solve_config cfg = build_solver(c);
  kpp_subadditivity r{};
  char* js = nullptr;
  check(kpp_subadditivity_check(path.get(), &grid, &cfg, c.num("subadd.level"), times.data(), times.size(),
                                opt.threads, &r, &js),
        "subadditivity");
  Outcome o;
  o.result = Json::parse(take(js));
  o.verdict = r.flagged ? Verdict::inconclusive : Verdict::confirmed;
  if (out) out->json("subadd.json", o.result, o.verdict);
  return o;
}

using Command = Outcome (*)(const Config&, const Options&, const Artifacts*);

Command find_command(const std::string& name) {
  if (name == "mean") return cmd_mean;
  if (name == "takeover") return cmd_takeover;
  if (name == "interval") return cmd_interval;
  if (name == "stability") return cmd_stability;
  if (name == "certify") return cmd_certify;
  if (name == "subadd") return cmd_subadd;
  return nullptr;
}

Outcome cmd_sweep(const Config& c, const Options& opt, const Artifacts* out) {
  const std::string& sub = c.str("sweep.command");
  const Command run = find_command(sub);
  if (!run) throw UsageError("sweep.command: unsupported command '" + sub + "'");
  std::vector<double> seeds = c.list("sweep.seeds");
  std::sort(seeds.begin(), seeds.end());
  std::vector<std::string> values{""};
  const std::string param = c.has("sweep.param") ? c.str("sweep.param") : "";
  if (!param.empty()) {
    if (param.rfind("sweep.", 0) == 0 || param == "noise.seed") throw UsageError("sweep.param cannot be " + param);
    Config probe(sub);
    probe.set(param, "0");  // validates the key
    std::vector<double> v = c.list("sweep.values");
    std::sort(v.begin(), v.end());
    values.clear();
    for (double x : v) values.push_back(fmt(x));
  }

  struct Cell {
    std::string seed, value;
  };
  std::vector<Cell> cells;
  for (double s : seeds) {
    if (s < 0 || s != std::floor(s)) throw UsageError("sweep.seeds must be nonnegative integers");
    for (const auto& v : values) cells.push_back({fmt(s), v});
  }
  std::vector<Outcome> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  Options inner;
  inner.threads = 1;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        Config cc(sub);
        for (const auto& [k, v] : c.values()) {
          if (k.rfind("sweep.", 0) != 0) cc.set(k, v);
        }
        cc.set("noise.seed", cells[i].seed);
        if (!param.empty()) cc.set(param, cells[i].value);
        results[i] = run(cc, inner, nullptr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, cells.size()));
  std::vector<std::future<void>> pool;
  for (unsigned w = 1; w < n; ++w) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Outcome o;
  o.result["command"] = sub;
  if (!param.empty()) o.result["param"] = param;
  Json arr = Json::array();
  std::vector<double> speeds;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Json cell{{"seed", cells[i].seed}};
    if (!param.empty()) cell["value"] = cells[i].value;
    cell["verdict"] = verdict_name(results[i].verdict);
    cell["result"] = results[i].result;
    arr.push_back(std::move(cell));
    o.verdict = worst(o.verdict, results[i].verdict);
    if (sub == "takeover") speeds.push_back(results[i].result["speed"]["speed"].get<double>());
  }
  o.result["cells"] = std::move(arr);
  if (!speeds.empty()) {
    double mean = 0.0;
    for (double s : speeds) mean += s;
    mean /= static_cast<double>(speeds.size());
    o.result["speed_summary"] = {{"mean", num(mean)},
                                 {"min", num(*std::min_element(speeds.begin(), speeds.end()))},
                                 {"max", num(*std::max_element(speeds.begin(), speeds.end()))}};
  }
  if (out) out->json("sweep.json", o.result, o.verdict);
  return o;
}

}  // namespace
}  // namespace kppcli

int main(int argc, char** argv) {
  using namespace kppcli;
  CLI::App app{"kpplab: nonautonomous Fisher-KPP experiments"};
  std::string command, config_file, out_dir = "kpplab-out";
  std::vector<std::string> overrides;
  unsigned threads = 0;
  bool print_config = false, list_keys = false;
  app.add_option("command", command, "mean | takeover | interval | stability | certify | subadd | sweep");
  app.add_option("-c,--config", config_file, "key=value configuration file");
  app.add_option("-s,--set", overrides, "override one key (key=value); repeatable");
  app.add_option("-o,--out", out_dir, "output directory");
  app.add_option("-j,--threads", threads, "worker threads (0 = all cores)");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  app.add_flag("--list-keys", list_keys, "print the configuration schema and exit");
  app.set_version_flag("--version", std::string(kpp_version()));
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list_keys) {
    for (const auto& k : schema()) {
      std::cout << k.key << " = " << (k.default_value.empty() ? "(unset)" : k.default_value) << "    # " << k.help
                << '\n';
    }
    return 0;
  }
  try {
    const bool sweep = command == "sweep";
    const auto run = sweep ? nullptr : find_command(command);
    if (!sweep && !run) throw UsageError("unknown command '" + command + "'");
    Config config(command);
    if (!config_file.empty()) config.load_file(config_file);
    for (const auto& o : overrides) config.apply_override(o);
    if (print_config) {
      std::cout << config.render();
      return 0;
    }
    Options opt;
    opt.threads = threads;
    const Artifacts artifacts(out_dir, config);
    const Outcome o = sweep ? cmd_sweep(config, opt, &artifacts) : run(config, opt, &artifacts);
    std::cout << command << ": " << verdict_name(o.verdict) << "\n" << o.result.dump(2) << '\n';
    return exit_code(o.verdict);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
