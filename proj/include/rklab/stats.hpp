#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rklab {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

struct SampleMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double fourth_central = 0.0;

  double stderr_mean() const;
  /// Delta-method standard error of the sample variance.
  double stderr_variance() const;
};

/// Moments accumulated in index order, so results do not depend on how
/// the samples were produced.
SampleMoments sample_moments(std::span<const double> xs);

double normal_cdf(double z);

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `samples` and the continuous `cdf`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic critical value sqrt(-ln(level/2)/2)/sqrt(n).
double ks_critical(std::size_t n, double level);

}  // namespace rklab
