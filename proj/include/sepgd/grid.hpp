#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sepgd {

/// Evaluation grid for the numerical certificates. The grid is linear up to
/// `linear_limit` (where all the curvature lives for the built-in functions)
/// and log-spaced beyond it, so far tails are covered without drowning the
/// origin region.
struct GridSpec {
  double u_min = 0.0;
  double u_max = 20.0;
  std::size_t points = 4096;
  double linear_limit = 20.0;

  std::vector<double> build() const {
    if (!(u_max > u_min)) throw std::invalid_argument("GridSpec: u_max must exceed u_min");
    if (points < 1000) throw std::invalid_argument("GridSpec: need at least 1000 points");
    std::vector<double> us;
    us.reserve(points);
    double split = std::min(u_max, std::max(u_min, linear_limit));
    if (split <= u_min) split = u_max;
    bool has_log_part = u_max > split * (1.0 + 1e-12) && split > 0.0;
    std::size_t n_lin = has_log_part ? points / 2 : points;
    for (std::size_t i = 0; i < n_lin; ++i) {
      double f = static_cast<double>(i) / static_cast<double>(n_lin - 1);
      us.push_back(u_min + f * (split - u_min));
    }
    if (has_log_part) {
      std::size_t n_log = points - n_lin;
      double l0 = std::log(split), l1 = std::log(u_max);
      for (std::size_t i = 1; i <= n_log; ++i) {
        double f = static_cast<double>(i) / static_cast<double>(n_log);
        us.push_back(std::exp(l0 + f * (l1 - l0)));
      }
    }
    return us;
  }
};

}  // namespace sepgd
