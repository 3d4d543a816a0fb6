#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "kpplab/coeff.hpp"

namespace kpplab {

struct NoiseParams {
  std::uint64_t seed = 0;
  double kappa = 1.0;   // mean-reversion rate
  double sigma = 0.5;   // OU volatility
  double xi_max = 0.75; // squash ceiling, in (0, 1)
  double step = 1e-3;
  TimeRange range{0.0, 1.0};
};

/// One realization t -> xi(theta_t omega) of a bounded mean-zero noise.
///
/// Samples come from the exact OU transition started in its stationary law,
/// then squashed by x -> xi_max * tanh(x). Between samples the path is linear,
/// so integral() is exact for the stored path.
class NoisePath {
 public:
  static NoisePath generate(const NoiseParams& params);
  /// Wrap given samples; used for deterministic test paths.
  static NoisePath from_samples(NoiseParams params, std::vector<double> samples);

  double operator()(double t) const;
  double integral(double s, double t) const;

  NoisePath shifted(double s) const;

  const NoiseParams& params() const { return data_->params; }
  double step() const { return data_->params.step; }
  /// Range in shifted coordinates.
  TimeRange range() const;
  double offset() const { return offset_; }
  std::span<const double> samples() const { return data_->samples; }
  /// Time (in shifted coordinates) of sample i.
  double sample_time(std::size_t i) const;
  double min_value() const { return data_->min_value; }
  double max_value() const { return data_->max_value; }

 private:
  struct Data {
    NoiseParams params;
    std::vector<double> samples;
    std::vector<double> prefix;  // trapezoid prefix integral from range.lo
    double min_value = 0.0;
    double max_value = 0.0;
  };

  NoisePath(std::shared_ptr<const Data> data, double offset)
      : data_(std::move(data)), offset_(offset) {}

  double primitive(double t_base) const;

  std::shared_ptr<const Data> data_;
  double offset_ = 0.0;
};

inline NoisePath shift(const NoisePath& noise, double s) {
  return noise.shifted(s);
}

/// Tabulated path t -> Y(theta_t omega) on range, sampled every `stride`
/// noise steps. t_trunc <= 0 selects the default truncation (tail < 1e-8).
CoefficientPath equilibrium_path(const NoisePath& noise, TimeRange range,
                                 std::size_t stride = 1, double t_trunc = 0.0);

/// CSV in the path format with (seed, kappa, sigma, xi_max, step) recorded.
void write_csv(std::ostream& os, const NoisePath& noise);

}  // namespace kpplab
