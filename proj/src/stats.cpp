#include "rklab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace rklab {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    correction_ += (sum_ - t) + x;
  else
    correction_ += (x - t) + sum_;
  sum_ = t;
}

double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

double SampleMoments::stderr_mean() const {
  return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
}

double SampleMoments::stderr_variance() const {
  if (n < 2) return 0.0;
  const double excess = std::max(fourth_central - variance * variance, 0.0);
  return std::sqrt(excess / static_cast<double>(n));
}

SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  const double nd = static_cast<double>(m.n);
  m.mean = compensated_sum(xs) / nd;
  CompensatedSum s2, s3, s4;
  for (double x : xs) {
    const double d = x - m.mean;
    const double d2 = d * d;
    s2.add(d2);
    s3.add(d2 * d);
    s4.add(d2 * d2);
  }
  const double m2 = s2.value() / nd;
  const double m3 = s3.value() / nd;
  const double m4 = s4.value() / nd;
  m.variance = m.n > 1 ? s2.value() / (nd - 1.0) : 0.0;
  m.fourth_central = m4;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical(std::size_t n, double level) {
  return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(static_cast<double>(n));
}

}  // namespace rklab
