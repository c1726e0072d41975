#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sepgd/rng.hpp"

namespace sepgd {

// Standard normal quantiles used for the confidence statements in reports.
inline constexpr double kZ95TwoSided = 1.959963984540054;
inline constexpr double kZ95OneSided = 1.6448536269514722;

/// Neumaier compensated summation. Gradient and risk accumulations run
/// through this so results do not depend on how support points are grouped.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty sample");
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

/// Unbiased sample standard deviation (n-1 denominator); 0 for n < 2.
inline double sample_stddev(std::span<const double> xs) {
  std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = mean(xs);
  KahanSum s;
  for (double x : xs) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(n - 1));
}

inline double standard_error(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

struct WilsonInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                      double z = kZ95TwoSided) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: zero trials");
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double hw = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {p, std::max(0.0, center - hw), std::min(1.0, center + hw)};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares fit of y against x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need >= 2 matched points");
  double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate x axis");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

/// Percentile bootstrap over per-cell samples: `samples[i]` holds the raw
/// trial values of cell i, `make_y` maps a resampled cell mean to the fitted
/// ordinate (typically log). Returns the percentile interval of the slope.
struct BootstrapSlope {
  double slope = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline BootstrapSlope bootstrap_slope(const std::vector<std::vector<double>>& samples,
                                      std::span<const double> x, std::uint64_t seed,
                                      int replicates = 200) {
  if (samples.size() != x.size()) throw std::invalid_argument("bootstrap_slope: axis mismatch");
  std::vector<double> y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].empty()) throw std::invalid_argument("bootstrap_slope: empty cell");
    y[i] = std::log(mean(samples[i]));
  }
  BootstrapSlope out;
  out.slope = least_squares(x, y).slope;
  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(replicates));
  for (int b = 0; b < replicates; ++b) {
    SplitMix64 rng(derive_key(seed, 0x626f6f74ULL, static_cast<std::uint64_t>(b)));
    std::vector<double> yb(samples.size());
    bool ok = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      KahanSum s;
      std::size_t n = samples[i].size();
      for (std::size_t k = 0; k < n; ++k) s.add(samples[i][rng.next_below(n)]);
      double m = s.value() / static_cast<double>(n);
      if (m <= 0.0) { ok = false; break; }
      yb[i] = std::log(m);
    }
    if (ok) slopes.push_back(least_squares(x, yb).slope);
  }
  if (slopes.size() < 8) throw std::runtime_error("bootstrap_slope: too many degenerate replicates");
  std::sort(slopes.begin(), slopes.end());
  auto pick = [&](double q) {
    double pos = q * static_cast<double>(slopes.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, slopes.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return slopes[lo] * (1.0 - frac) + slopes[hi] * frac;
  };
  out.lower = pick(0.025);
  out.upper = pick(0.975);
  return out;
}

}  // namespace sepgd
