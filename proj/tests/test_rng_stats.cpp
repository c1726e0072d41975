#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "sepgd/experiments.hpp"
#include "sepgd/rng.hpp"
#include "sepgd/stats.hpp"

using namespace sepgd;

TEST_CASE("splitmix streams are deterministic and key-separated") {
  SplitMix64 a(derive_key(42, 1, 7));
  SplitMix64 b(derive_key(42, 1, 7));
  SplitMix64 c(derive_key(42, 2, 7));
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    if (x != c.next_u64()) any_diff = true;
  }
  REQUIRE(any_diff);
}

TEST_CASE("uniform doubles live in [0,1) and look uniform") {
  SplitMix64 rng(derive_key(7));
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // mean of U[0,1): se = 1/sqrt(12 n)
  REQUIRE(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("next_below covers the range without obvious bias") {
  SplitMix64 rng(derive_key(9));
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100000; ++i) counts[rng.next_below(10)]++;
  for (int c : counts) REQUIRE(std::abs(c - 10000) < 5 * std::sqrt(10000.0 * 0.9));
}

TEST_CASE("mean / stddev / stderr basics") {
  std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  REQUIRE_THAT(mean(xs), Catch::Matchers::WithinAbs(2.5, 1e-15));
  REQUIRE_THAT(sample_stddev(xs),
               Catch::Matchers::WithinAbs(std::sqrt(5.0 / 3.0), 1e-12));
  REQUIRE_THAT(standard_error(xs),
               Catch::Matchers::WithinAbs(std::sqrt(5.0 / 3.0) / 2.0, 1e-12));
  REQUIRE_THROWS_AS(mean(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("wilson interval brackets the plug-in estimate") {
  auto w = wilson_interval(30, 100);
  REQUIRE(w.lower < 0.3);
  REQUIRE(w.upper > 0.3);
  REQUIRE(w.lower > 0.2);
  REQUIRE(w.upper < 0.42);
  auto z = wilson_interval(0, 50);
  REQUIRE_THAT(z.lower, Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE(z.upper > 0.0);
  REQUIRE_THROWS_AS(wilson_interval(1, 0), std::invalid_argument);
}

TEST_CASE("least squares recovers an exact line") {
  std::vector<double> x = {1.0, 2.0, 3.0, 5.0};
  std::vector<double> y;
  for (double v : x) y.push_back(-0.5 * v + 2.0);
  auto f = least_squares(x, y);
  REQUIRE_THAT(f.slope, Catch::Matchers::WithinAbs(-0.5, 1e-14));
  REQUIRE_THAT(f.intercept, Catch::Matchers::WithinAbs(2.0, 1e-14));
}

TEST_CASE("bootstrap slope on a noiseless power law") {
  std::vector<double> x;
  std::vector<std::vector<double>> cells;
  for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
    x.push_back(std::log(n));
    cells.push_back(std::vector<double>(50, 3.0 / n));
  }
  auto b = bootstrap_slope(cells, x, 123);
  REQUIRE_THAT(b.slope, Catch::Matchers::WithinAbs(-1.0, 1e-12));
  REQUIRE_THAT(b.lower, Catch::Matchers::WithinAbs(-1.0, 1e-12));
  REQUIRE_THAT(b.upper, Catch::Matchers::WithinAbs(-1.0, 1e-12));
}

TEST_CASE("kahan summation survives cancellation-heavy input") {
  KahanSum s;
  s.add(1e16);
  for (int i = 0; i < 10000; ++i) s.add(1e-3);
  s.add(-1e16);
  REQUIRE_THAT(s.value(), Catch::Matchers::WithinRel(10.0, 1e-9));
}

TEST_CASE("parallel_for fills every slot exactly once and rethrows") {
  const std::size_t n = 10000;
  std::vector<int> hits(n, 0);
  parallel_for(n, [&](std::size_t i) { hits[i]++; });
  for (int h : hits) REQUIRE(h == 1);
  REQUIRE_THROWS_AS(parallel_for(64,
                                 [](std::size_t i) {
                                   if (i == 13) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}
