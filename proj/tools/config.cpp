#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kppcli {

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"path.kind", "constant", "constant | periodic | section5 | equilibrium | tabulated"},
      {"path.a", "1", "constant rate"},
      {"path.mean", "1", "periodic mean"},
      {"path.amplitude", "0.5", "periodic amplitude"},
      {"path.period", "6.28318530718", "periodic period"},
      {"path.file", "", "tabulated path: CSV with t,value rows on a uniform grid"},
      {"noise.seed", "1", "noise seed (equilibrium paths)"},
      {"noise.kappa", "1", "OU mean-reversion rate"},
      {"noise.sigma", "0.5", "OU volatility"},
      {"noise.xi_max", "0.75", "squash ceiling in (0,1)"},
      {"noise.step", "0.001", "noise sample spacing"},
      {"noise.stride", "5", "noise steps per equilibrium-path sample"},
      {"horizon", "", "time window lo,hi (averaging window for mean, run window otherwise)"},
      {"mean.r_min", "5", "minimal window length"},
      {"mean.stride", "0.05", "window endpoint grid"},
      {"grid.x_lo", "-100", "left end"},
      {"grid.x_hi", "400", "right end"},
      {"grid.dx", "0.1", "spacing"},
      {"solver.dt", "0.005", "time step"},
      {"solver.store_stride", "100", "steps between stored frames"},
      {"solver.margin", "50", "front-safety margin at each end (0 disables)"},
      {"solver.margin_tol", "1e-06", "allowed variation inside a margin zone"},
      {"init.kind", "heaviside", "heaviside | front_like | bump | constant | oscillating"},
      {"init.x0", "0", "step / ramp location"},
      {"init.width", "1", "front_like ramp width"},
      {"init.plateau", "1", "front_like plateau"},
      {"init.center", "0", "bump centre"},
      {"init.half_width", "10", "bump half width"},
      {"init.height", "1", "bump height"},
      {"init.value", "0.5", "constant value"},
      {"init.mid", "1.25", "oscillating midline"},
      {"init.amp", "0.75", "oscillating amplitude"},
      {"init.wavelength", "20", "oscillating wavelength"},
      {"fit.t_a", "", "speed fit start (default 0.4 * run length)"},
      {"fit.t_b", "", "speed fit end (default run length)"},
      {"fit.level", "0.5", "front level used for the speed fit"},
      {"takeover.h", "0.3", "offset from c_hat defining the take-over regions"},
      {"takeover.checks", "", "check times (default half, three quarters and end of the run)"},
      {"takeover.eps_outer", "0.001", "outer-region tolerance"},
      {"takeover.eps_inner", "0.01", "inner-region tolerance"},
      {"interval.c_min", "1", "smallest probe speed"},
      {"interval.c_max", "3.6", "largest probe speed"},
      {"interval.c_step", "0.1", "probe speed spacing"},
      {"interval.t_probe", "80", "probe time"},
      {"interval.shift_span", "80", "shifts spread over [0, span)"},
      {"interval.shift_count", "8", "number of shifts"},
      {"interval.eps_spread", "0.9", "spread threshold"},
      {"interval.eps_vanish", "0.05", "vanish threshold"},
      {"stability.slack", "0.001", "allowed excess over the decay bound"},
      {"certify.mu", "0.8", "decay rate of the exponential bounds"},
      {"certify.mu_tilde", "1", "second rate of the lower curve"},
      {"certify.delta", "0", "delta (0: helper choice)"},
      {"certify.d", "0", "d (0: max of d_b and the sufficient threshold)"},
      {"certify.r_min", "10", "first block length for B"},
      {"certify.b_horizon", "0,400", "window on which B is built"},
      {"certify.tolerance", "1e-06", "added to the scheme slack"},
      {"subadd.times", "5,10,20,35,50", "pair times"},
      {"subadd.level", "0.5", "front level"},
      {"sweep.command", "takeover", "takeover | mean | subadd"},
      {"sweep.seeds", "1,2,3", "noise seeds"},
      {"sweep.param", "", "optional key swept over sweep.values"},
      {"sweep.values", "", "values for sweep.param"},
  };
  return keys;
}

namespace {

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : schema()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Per-command defaults layered over the schema.
std::vector<std::pair<std::string, std::string>> command_defaults(const std::string& command) {
  if (command == "takeover" || command == "sweep") return {{"horizon", "0,100"}};
  if (command == "stability") return {{"horizon", "0,20"}, {"init.kind", "oscillating"}, {"solver.store_stride", "20"}};
  if (command == "certify") {
    return {{"horizon", "0,40"}, {"grid.x_hi", "250"}, {"solver.store_stride", "200"}};
  }
  if (command == "interval") return {{"init.kind", "front_like"}, {"solver.store_stride", "1000000"}};
  if (command == "subadd") return {{"grid.x_hi", "300"}};
  return {};
}

}  // namespace

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError(std::string(what) + ": expected a number, got '" + s + "'");
  }
  return v;
}

Config::Config(std::string command) : command_(std::move(command)) {
  for (const auto& k : schema()) {
    if (!k.default_value.empty()) values_[std::string(k.key)] = std::string(k.default_value);
  }
  for (auto& [k, v] : command_defaults(command_)) values_[k] = v;
}

void Config::set(const std::string& key, std::string value) {
  if (!find_key(key)) throw UsageError("unknown configuration key '" + key + "'");
  value = trim(value);
  if (value.empty()) {
    values_.erase(key);
  } else {
    values_[key] = std::move(value);
  }
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw UsageError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

void Config::load_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config file " + file);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(file + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!find_key(key)) {
      throw UsageError(file + ":" + std::to_string(lineno) + ": unknown configuration key '" + key + "'");
    }
    set(key, line.substr(eq + 1));
  }
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

const std::string& Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("missing required configuration key '" + key + "'");
  return it->second;
}

double Config::num(const std::string& key) const { return parse_number(str(key), key); }

long long Config::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw UsageError(key + ": expected an integer");
  return static_cast<long long>(v);
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, key));
  if (out.empty()) throw UsageError(key + ": empty list");
  return out;
}

std::pair<double, double> Config::range(const std::string& key) const {
  const auto v = list(key);
  if (v.size() != 2) throw UsageError(key + ": expected lo,hi");
  if (!(v[1] > v[0])) throw UsageError(key + ": zero-length or reversed range " + str(key));
  return {v[0], v[1]};
}

std::string Config::render() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace kppcli
