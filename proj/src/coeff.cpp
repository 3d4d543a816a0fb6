#include "kpplab/coeff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "kpplab/error.hpp"

namespace kpplab {

std::string_view to_string(PathKind kind) {
  switch (kind) {
    case PathKind::constant: return "constant";
    case PathKind::periodic: return "periodic";
    case PathKind::section5: return "section5";
    case PathKind::equilibrium: return "from-noise-equilibrium";
    case PathKind::tabulated: return "tabulated";
  }
  return "unknown";
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

namespace detail {

class PathProfile {
 public:
  PathProfile(PathKind kind, ParamList params)
      : kind_(kind), params_(std::move(params)) {}
  virtual ~PathProfile() = default;

  virtual double eval(double t) const = 0;
  virtual double primitive(double t) const = 0;
  virtual double max_over(double s, double t) const = 0;
  virtual double step() const { return 0.0; }
  /// Nonzero for profiles whose phase offset may be reduced modulo it.
  virtual double period() const { return 0.0; }

  PathKind kind() const { return kind_; }
  const ParamList& params() const { return params_; }

 private:
  PathKind kind_;
  ParamList params_;
};

namespace {

class ConstantProfile final : public PathProfile {
 public:
  explicit ConstantProfile(double a)
      : PathProfile(PathKind::constant, {{"a", format_number(a)}}), a_(a) {}

  double eval(double) const override { return a_; }
  double primitive(double t) const override { return a_ * t; }
  double max_over(double, double) const override { return a_; }

 private:
  double a_;
};

class PeriodicProfile final : public PathProfile {
 public:
  PeriodicProfile(double mean, double amplitude, double period)
      : PathProfile(PathKind::periodic,
                    {{"mean", format_number(mean)},
                     {"amplitude", format_number(amplitude)},
                     {"period", format_number(period)}}),
        mean_(mean),
        amp_(amplitude),
        period_(period),
        omega_(2.0 * std::numbers::pi / period) {}

  double eval(double t) const override { return mean_ + amp_ * std::sin(omega_ * t); }
  double primitive(double t) const override {
    return mean_ * t - amp_ / omega_ * std::cos(omega_ * t);
  }
  double max_over(double s, double t) const override {
    if (t < s) std::swap(s, t);
    const double top = mean_ + std::abs(amp_);
    if (t - s >= period_) return top;
    // Crest where omega*t = pi/2 (mod 2pi) for positive amplitude.
    const double crest_phase = amp_ >= 0 ? 0.25 : 0.75;
    const double k = std::ceil(s / period_ - crest_phase);
    const double crest = (k + crest_phase) * period_;
    if (crest <= t) return top;
    return std::max(eval(s), eval(t));
  }
  double period() const override { return period_; }

 private:
  double mean_, amp_, period_, omega_;
};

/// Continuous piecewise-linear profile through knots (t_j, v_j). Knots may
/// coincide (zero-width spikes), in which case the later value wins for eval
/// but the spike value still counts for max_over.
class PiecewiseLinearProfile final : public PathProfile {
 public:
  PiecewiseLinearProfile(PathKind kind, ParamList params, std::vector<double> knots,
                         std::vector<double> values, double uniform_step)
      : PathProfile(kind, std::move(params)),
        t_(std::move(knots)),
        v_(std::move(values)),
        h_(uniform_step) {
    cum_.resize(t_.size(), 0.0);
    for (std::size_t j = 1; j < t_.size(); ++j) {
      cum_[j] = cum_[j - 1] + 0.5 * (t_[j] - t_[j - 1]) * (v_[j] + v_[j - 1]);
    }
  }

  double eval(double t) const override {
    const std::size_t j = segment(t);
    if (j + 1 >= t_.size()) return v_.back();
    const double w = (t - t_[j]) / (t_[j + 1] - t_[j]);
    return v_[j] + w * (v_[j + 1] - v_[j]);
  }

  double primitive(double t) const override {
    const std::size_t j = segment(t);
    return cum_[j] + 0.5 * (t - t_[j]) * (v_[j] + eval(t));
  }

  double max_over(double s, double t) const override {
    if (t < s) std::swap(s, t);
    double m = std::max(eval(s), eval(t));
    auto first = std::upper_bound(t_.begin(), t_.end(), s);
    auto last = std::lower_bound(t_.begin(), t_.end(), t);
    for (auto it = first; it < last; ++it) {
      m = std::max(m, v_[static_cast<std::size_t>(it - t_.begin())]);
    }
    return m;
  }

  double step() const override { return h_; }

 private:
  /// Index j of the last knot with t_j <= t, clamped so that j+1 is valid
  /// and t_{j+1} > t_j whenever t lies inside the table.
  std::size_t segment(double t) const {
    if (t <= t_.front()) return 0;
    if (t >= t_.back()) return t_.size() - 1;
    std::size_t j;
    if (h_ > 0.0) {
      j = static_cast<std::size_t>(std::floor((t - t_.front()) / h_));
      j = std::min(j, t_.size() - 2);
    } else {
      j = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    }
    return j;
  }

  std::vector<double> t_, v_, cum_;
  double h_;
};

/// Knot table for the explicit nonautonomous example on [-t_max, t_max].
/// Block n occupies [l_n, l_{n+1}]: a spike on [l_n, L_n] with
/// L_n = l_n + 4^{-(n+1)}, then a plateau g_n (1 for even n, 2 for odd n)
/// of length n+1. The spike is a hat with its extremum at the midpoint:
/// 2^k for n = 2k, 2^{-(k+1)} for n = 2k+1, and f_0 = 1.
std::shared_ptr<const PathProfile> make_section5(double t_max) {
  std::vector<double> pos_t, pos_v;
  double l = 0.0;
  double left_value = 1.0;
  for (int n = 0;; ++n) {
    const double width = std::ldexp(1.0, -2 * (n + 1));
    const double big_l = l + width;
    const double plateau = (n % 2 == 0) ? 1.0 : 2.0;
    double extremum;
    if (n == 0) {
      extremum = 1.0;
    } else if (n % 2 == 0) {
      extremum = std::ldexp(1.0, n / 2);
    } else {
      extremum = std::ldexp(1.0, -((n - 1) / 2 + 1));
    }
    pos_t.insert(pos_t.end(), {l, l + 0.5 * width, big_l});
    pos_v.insert(pos_v.end(), {left_value, extremum, plateau});
    left_value = plateau;
    l = big_l + n + 1;
    if (l > t_max) {
      pos_t.push_back(l);
      pos_v.push_back(plateau);
      break;
    }
  }
  std::vector<double> t, v;
  t.reserve(2 * pos_t.size());
  v.reserve(2 * pos_t.size());
  for (std::size_t i = pos_t.size(); i-- > 1;) {
    t.push_back(-pos_t[i]);
    v.push_back(pos_v[i]);
  }
  t.insert(t.end(), pos_t.begin(), pos_t.end());
  v.insert(v.end(), pos_v.begin(), pos_v.end());
  return std::make_shared<PiecewiseLinearProfile>(PathKind::section5, ParamList{},
                                                  std::move(t), std::move(v), 0.0);
}

constexpr double kRangeSlack = 1e-9;

}  // namespace
}  // namespace detail

CoefficientPath::CoefficientPath(std::shared_ptr<const detail::PathProfile> profile,
                                 TimeRange range, double offset)
    : profile_(std::move(profile)), range_(range), offset_(offset) {}

CoefficientPath CoefficientPath::constant(double a, TimeRange range) {
  require(a > 0.0 && std::isfinite(a), "constant path: rate must be positive");
  require(range.lo < range.hi, "constant path: empty range");
  return {std::make_shared<detail::ConstantProfile>(a), range, 0.0};
}

CoefficientPath CoefficientPath::periodic(double mean, double amplitude, double period,
                                          TimeRange range) {
  require(mean - std::abs(amplitude) > 0.0, "periodic path: need mean > |amplitude|");
  require(period > 0.0, "periodic path: period must be positive");
  require(range.lo < range.hi, "periodic path: empty range");
  return {std::make_shared<detail::PeriodicProfile>(mean, amplitude, period), range, 0.0};
}

CoefficientPath CoefficientPath::section5(TimeRange range) {
  require(range.lo < range.hi, "section5 path: empty range");
  const double t_max = std::max(std::abs(range.lo), std::abs(range.hi));
  require(t_max <= 1e5, "section5 path: range exceeds the block table");
  return {detail::make_section5(t_max + 1.0), range, 0.0};
}

CoefficientPath CoefficientPath::tabulated(double t0, double step, std::vector<double> values,
                                           PathKind kind, ParamList params) {
  require(step > 0.0, "tabulated path: step must be positive");
  require(values.size() >= 2, "tabulated path: need at least two samples");
  for (double v : values) {
    require(v > 0.0 && std::isfinite(v), "tabulated path: samples must be positive and finite");
  }
  std::vector<double> knots(values.size());
  for (std::size_t i = 0; i < knots.size(); ++i) knots[i] = t0 + static_cast<double>(i) * step;
  TimeRange range{knots.front(), knots.back()};
  params.insert(params.begin(), {"step", format_number(step)});
  return {std::make_shared<detail::PiecewiseLinearProfile>(kind, std::move(params),
                                                           std::move(knots), std::move(values),
                                                           step),
          range, 0.0};
}

void CoefficientPath::check_in_range(double t) const {
  if (!(t >= range_.lo - detail::kRangeSlack && t <= range_.hi + detail::kRangeSlack)) {
    fail(ErrorCode::out_of_range, "coefficient path evaluated at t=" + format_number(t) +
                                      " outside [" + format_number(range_.lo) + ", " +
                                      format_number(range_.hi) + "]");
  }
}

double CoefficientPath::operator()(double t) const {
  check_in_range(t);
  return profile_->eval(t + offset_);
}

double CoefficientPath::integral(double s, double t) const {
  check_in_range(s);
  check_in_range(t);
  return profile_->primitive(t + offset_) - profile_->primitive(s + offset_);
}

double CoefficientPath::max_over(double s, double t) const {
  check_in_range(s);
  check_in_range(t);
  return profile_->max_over(s + offset_, t + offset_);
}

CoefficientPath CoefficientPath::shifted(double s) const {
  double offset = offset_ + s;
  if (const double p = profile_->period(); p > 0.0) offset = std::fmod(offset, p);
  return {profile_, TimeRange{range_.lo - s, range_.hi - s}, offset};
}

PathKind CoefficientPath::kind() const { return profile_->kind(); }
const ParamList& CoefficientPath::parameters() const { return profile_->params(); }
double CoefficientPath::native_step() const { return profile_->step(); }

double windowed_mean(const CoefficientPath& path, double s, double t) {
  require(s < t, "windowed_mean: need s < t");
  return path.integral(s, t) / (t - s);
}

MeanEstimate estimate_means(const CoefficientPath& path, double r_min, double stride,
                            TimeRange horizon) {
  require(r_min > 0.0 && stride > 0.0, "estimate_means: r_min and stride must be positive");
  require(horizon.length() >= 2.0 * r_min, "estimate_means: horizon shorter than 2*r_min");
  require(stride <= r_min, "estimate_means: stride must not exceed r_min");

  const double full = path.integral(horizon.lo, horizon.hi) / horizon.length();
  double lo = full;
  double hi = full;
  // Windows [s, s + r_min] with s on the stride grid; the full-horizon mean
  // is folded in so that a_inf <= a_hat <= a_sup.
  const auto n_starts =
      static_cast<std::size_t>(std::floor((horizon.length() - r_min) / stride + 1e-9));
  for (std::size_t i = 0; i <= n_starts; ++i) {
    const double s = horizon.lo + static_cast<double>(i) * stride;
    const double avg = path.integral(s, s + r_min) / r_min;
    lo = std::min(lo, avg);
    hi = std::max(hi, avg);
  }

  MeanEstimate est;
  est.r_min = r_min;
  est.stride = stride;
  est.horizon = horizon;
  est.a_inf = lo;
  est.a_hat = full;
  est.a_sup = hi;
  return est;
}

std::vector<MeanEstimate> mean_ladder(const CoefficientPath& path,
                                      std::span<const double> r_values, double stride,
                                      TimeRange horizon) {
  std::vector<MeanEstimate> out;
  out.reserve(r_values.size());
  for (double r : r_values) out.push_back(estimate_means(path, r, stride, horizon));
  return out;
}

PiecewiseB::PiecewiseB(CoefficientPath path, double scale, double block_length,
                       std::int64_t first_block, std::vector<double> block_means)
    : path_(std::move(path)),
      scale_(scale),
      block_length_(block_length),
      first_block_(first_block),
      block_means_(std::move(block_means)) {
  require(block_length_ > 0.0 && !block_means_.empty(), "PiecewiseB: empty block table");
  constexpr int kSamples = 1024;
  for (std::size_t k = 0; k < block_means_.size(); ++k) {
    const double t0 = static_cast<double>(first_block_ + static_cast<std::int64_t>(k)) * block_length_;
    for (int i = 1; i <= kSamples; ++i) {
      const double t = t0 + block_length_ * i / kSamples;
      const double b = scale_ * path_.integral(t0, t) - block_means_[k] * (t - t0);
      sup_norm_ = std::max(sup_norm_, std::abs(b));
    }
  }
}

TimeRange PiecewiseB::coverage() const {
  const double lo = static_cast<double>(first_block_) * block_length_;
  return {lo, lo + static_cast<double>(block_means_.size()) * block_length_};
}

std::size_t PiecewiseB::block_index(double t) const {
  const TimeRange cov = coverage();
  if (!(t >= cov.lo - 1e-9 && t <= cov.hi + 1e-9)) {
    fail(ErrorCode::out_of_range, "PiecewiseB evaluated at t=" + format_number(t) +
                                      " outside block coverage [" + format_number(cov.lo) +
                                      ", " + format_number(cov.hi) + "]");
  }
  const auto k = static_cast<std::int64_t>(std::floor(t / block_length_)) - first_block_;
  return static_cast<std::size_t>(
      std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(block_means_.size()) - 1));
}

double PiecewiseB::operator()(double t) const {
  const std::size_t k = block_index(t);
  const double t0 = static_cast<double>(first_block_ + static_cast<std::int64_t>(k)) * block_length_;
  return scale_ * path_.integral(t0, t) - block_means_[k] * (t - t0);
}

double PiecewiseB::derivative(double t) const {
  return scale_ * path_(t) - block_means_[block_index(t)];
}

double PiecewiseB::min_block_mean() const {
  return *std::min_element(block_means_.begin(), block_means_.end());
}

bool PiecewiseB::is_breakpoint(double t, double tol) const {
  const double r = t / block_length_;
  return std::abs(r - std::round(r)) * block_length_ <= tol;
}

PiecewiseB build_B(const CoefficientPath& path, double gamma, double scale, double r_min,
                   TimeRange horizon, double stride) {
  require(scale > 0.0 && scale <= 1.0, "build_B: scale must lie in (0, 1]");
  require(gamma > 0.0, "build_B: gamma must be positive");
  const MeanEstimate est = estimate_means(path, r_min, std::min(stride, r_min), horizon);
  require(gamma < scale * est.a_inf,
          "build_B: gamma=" + format_number(gamma) + " is not below scale*a_inf=" +
              format_number(scale * est.a_inf));

  double worst_mean = 0.0;
  double worst_start = 0.0;
  for (double T = r_min; T <= horizon.length() / 4.0 * (1.0 + 1e-12); T *= 2.0) {
    const auto k_lo = static_cast<std::int64_t>(std::ceil(horizon.lo / T - 1e-12));
    const auto k_hi = static_cast<std::int64_t>(std::floor(horizon.hi / T + 1e-12));
    if (k_hi <= k_lo) break;
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(k_hi - k_lo));
    worst_mean = std::numeric_limits<double>::infinity();
    for (std::int64_t k = k_lo; k < k_hi; ++k) {
      const double t0 = static_cast<double>(k) * T;
      const double m = scale * path.integral(t0, t0 + T) / T;
      means.push_back(m);
      if (m < worst_mean) {
        worst_mean = m;
        worst_start = t0;
      }
    }
    if (worst_mean > gamma) return PiecewiseB(path, scale, T, k_lo, std::move(means));
  }
  fail(ErrorCode::invalid_argument,
       "build_B: no admissible block length up to horizon/4; block starting at t=" +
           format_number(worst_start) + " has mean " + format_number(worst_mean) +
           " <= gamma=" + format_number(gamma));
}

void write_csv(std::ostream& os, const CoefficientPath& path, double t0, double t1, double dt) {
  require(dt > 0.0 && t1 >= t0, "write_csv: invalid sampling");
  os << "# kind=" << to_string(path.kind()) << " offset=" << format_number(path.offset());
  for (const auto& [k, v] : path.parameters()) os << ' ' << k << '=' << v;
  os << "\nt,value\n";
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    os << format_number(t) << ',' << format_number(path(t)) << '\n';
  }
}

}  // namespace kpplab
