#include "kpplab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "kpplab/error.hpp"

namespace kpplab {

namespace {

void validate(const NoiseParams& p) {
  require(p.kappa > 0.0, "noise: kappa must be positive");
  require(p.sigma >= 0.0, "noise: sigma must be nonnegative");
  require(p.xi_max > 0.0 && p.xi_max < 1.0, "noise: xi_max must lie in (0, 1)");
  require(p.step > 0.0, "noise: step must be positive");
  require(p.range.lo < p.range.hi, "noise: empty range");
}

}  // namespace

NoisePath NoisePath::generate(const NoiseParams& params) {
  validate(params);
  const auto n = static_cast<std::size_t>(std::floor(params.range.length() / params.step + 1e-9)) + 1;
  std::vector<double> xi(n);

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rho = std::exp(-params.kappa * params.step);
  const double innov = params.sigma * std::sqrt((1.0 - rho * rho) / (2.0 * params.kappa));
  double x = params.sigma / std::sqrt(2.0 * params.kappa) * normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) x = rho * x + innov * normal(rng);
    xi[i] = params.xi_max * std::tanh(x);
  }
  return from_samples(params, std::move(xi));
}

NoisePath NoisePath::from_samples(NoiseParams params, std::vector<double> samples) {
  validate(params);
  require(samples.size() >= 2, "noise: need at least two samples");
  for (double v : samples) {
    require(std::isfinite(v) && v > -1.0, "noise: samples must be finite and above -1");
  }
  auto data = std::make_shared<Data>();
  params.range.hi = params.range.lo + static_cast<double>(samples.size() - 1) * params.step;
  data->params = params;
  data->samples = std::move(samples);
  const auto& s = data->samples;
  data->prefix.assign(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    data->prefix[i] = data->prefix[i - 1] + 0.5 * params.step * (s[i - 1] + s[i]);
  }
  auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  data->min_value = *mn;
  data->max_value = *mx;
  return NoisePath(std::move(data), 0.0);
}

TimeRange NoisePath::range() const {
  const TimeRange r = data_->params.range;
  return {r.lo - offset_, r.hi - offset_};
}

double NoisePath::sample_time(std::size_t i) const {
  return data_->params.range.lo + static_cast<double>(i) * data_->params.step - offset_;
}

double NoisePath::operator()(double t) const {
  const TimeRange r = data_->params.range;
  const double tb = t + offset_;
  if (!(tb >= r.lo - 1e-9 && tb <= r.hi + 1e-9)) {
    fail(ErrorCode::out_of_range, "noise evaluated outside its range at t=" + format_number(t));
  }
  const auto& s = data_->samples;
  const double u = (tb - r.lo) / data_->params.step;
  const auto j = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), s.size() - 2);
  const double w = u - static_cast<double>(j);
  return s[j] + w * (s[j + 1] - s[j]);
}

double NoisePath::primitive(double tb) const {
  const TimeRange r = data_->params.range;
  if (!(tb >= r.lo - 1e-9 && tb <= r.hi + 1e-9)) {
    fail(ErrorCode::out_of_range,
         "noise integrated outside its range at t=" + format_number(tb - offset_));
  }
  const auto& s = data_->samples;
  const double u = (tb - r.lo) / data_->params.step;
  const auto j = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), s.size() - 2);
  const double w = u - static_cast<double>(j);
  const double v = s[j] + w * (s[j + 1] - s[j]);
  return data_->prefix[j] + 0.5 * w * data_->params.step * (s[j] + v);
}

double NoisePath::integral(double s, double t) const {
  return primitive(t + offset_) - primitive(s + offset_);
}

NoisePath NoisePath::shifted(double s) const { return NoisePath(data_, offset_ + s); }

void write_csv(std::ostream& os, const NoisePath& noise) {
  const NoiseParams& p = noise.params();
  os << "# kind=noise offset=" << format_number(noise.offset()) << " seed=" << p.seed
     << " kappa=" << format_number(p.kappa) << " sigma=" << format_number(p.sigma)
     << " xi_max=" << format_number(p.xi_max) << " step=" << format_number(p.step)
     << "\nt,value\n";
  const auto samples = noise.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    os << format_number(noise.sample_time(i)) << ',' << format_number(samples[i]) << '\n';
  }
}

}  // namespace kpplab
