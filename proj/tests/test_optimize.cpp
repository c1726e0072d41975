#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sepgd/bounds.hpp"
#include "sepgd/data.hpp"
#include "sepgd/optimize.hpp"

using namespace sepgd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DiscreteDistribution single_point() {
  return DiscreteDistribution({{1.0, 0.0}}, {1.0}, {1.0, 0.0}, 1.0);
}

}  // namespace

TEST_CASE("gd returns the initialization at T = 1") {
  auto loss = make_logistic();
  auto data = dataset_from_counts(single_point(), {4});
  auto traj = run_gd(loss, data, 0.5, 1);
  REQUIRE(traj.final_model == Vector{0.0, 0.0});
  REQUIRE_THAT(traj.final_emp_risk, WithinRel(std::log(2.0), 1e-15));
  REQUIRE(traj.history.size() == 1);
  REQUIRE(traj.history[0].t == 1);
  REQUIRE(traj.history[0].norm == 0.0);
}

TEST_CASE("one logistic step on a single example") {
  auto loss = make_logistic();
  auto data = dataset_from_counts(single_point(), {1});
  auto traj = run_gd(loss, data, 0.5, 2);
  REQUIRE_THAT(traj.final_model[0], WithinAbs(0.25, 1e-16));
  REQUIRE_THAT(traj.final_model[1], WithinAbs(0.0, 1e-16));
}

TEST_CASE("step size guard") {
  auto loss = make_logistic();  // beta = 1/4 -> limit 2
  auto data = dataset_from_counts(single_point(), {1});
  REQUIRE_NOTHROW(run_gd(loss, data, 2.0, 3));
  REQUIRE_THROWS_AS(run_gd(loss, data, 2.5, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(run_gd(loss, data, 0.0, 3), std::invalid_argument);
  REQUIRE_THROWS_AS(run_sgd(loss, data, -1.0, 3, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(run_gd(loss, data, 0.5, 0), std::invalid_argument);
}

TEST_CASE("gd descends monotonically") {
  auto phi = TailFunction::polynomial(2.0);
  auto loss = make_quadratic_extension(phi);
  auto dist = make_bigT_instance(1.0 / 16.0, 50);
  auto data = sample_dataset(dist, 50, 11);
  auto traj = run_gd(loss, data, 0.5 / loss.beta(), 3000);
  REQUIRE(traj.max_ascent <= 1e-12);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& rec : traj.history) {
    REQUIRE(rec.emp_risk <= prev + 1e-12);
    prev = rec.emp_risk;
  }
  REQUIRE(traj.final_emp_risk <= loss.value(0.0));
}

TEST_CASE("history honours the cap") {
  auto loss = make_logistic();
  auto data = dataset_from_counts(single_point(), {2});
  TrainOptions opts;
  opts.history_cap = 100;
  auto traj = run_gd(loss, data, 0.5, 10000, opts);
  REQUIRE(traj.history.size() <= 102);
  REQUIRE(traj.history.front().t == 1);
  REQUIRE(traj.history.back().t == 10000);

  TrainOptions off;
  off.record_history = false;
  auto lean = run_gd(loss, data, 0.5, 500, off);
  REQUIRE(lean.history.empty());
  REQUIRE(lean.final_norm > 0.0);
}

TEST_CASE("sgd on a single support point averages the gd iterates") {
  auto loss = make_logistic();
  auto data = dataset_from_counts(single_point(), {6});
  long long T = 257;
  auto traj = run_sgd(loss, data, 0.5, T, 99);

  // scalar oracle: w_{t+1} = w_t - eta l'(w_t), averaged over t = 1..T
  double w = 0.0, acc = 0.0;
  for (long long t = 1; t <= T; ++t) {
    acc += w;
    if (t < T) w -= 0.5 * loss.slope(w);
  }
  REQUIRE_THAT(traj.final_model[0], WithinAbs(acc / static_cast<double>(T), 1e-12));
  REQUIRE(traj.drawn_counts[0] == T);
  REQUIRE_THAT(traj.final_model[1], WithinAbs(0.0, 1e-16));
}

TEST_CASE("sgd is bitwise reproducible for a fixed seed") {
  auto phi = TailFunction::exponential();
  auto loss = make_linear_extension(phi);
  auto dist = make_smallT_instance(phi, 0.1, 1.0 / 16.0, 0.5, 500);
  auto data = sample_dataset(dist, 300, 5);
  auto a = run_sgd(loss, data, 0.5, 500, 77);
  auto b = run_sgd(loss, data, 0.5, 500, 77);
  REQUIRE(a.final_model == b.final_model);
  REQUIRE(a.realized_loss_mean == b.realized_loss_mean);
  REQUIRE(a.drawn_counts == b.drawn_counts);
  auto c = run_sgd(loss, data, 0.5, 500, 78);
  REQUIRE(a.final_model != c.final_model);
  REQUIRE(a.steps == 500);
  // T = 1 returns the origin
  auto t1 = run_sgd(loss, data, 0.5, 1, 7);
  REQUIRE(t1.final_model == Vector{0.0, 0.0});
}

TEST_CASE("grad norm check is nonpositive and matches the closed form at 0") {
  auto loss = make_logistic();
  auto data = dataset_from_counts(single_point(), {1});
  double val = grad_norm_check(loss, data, {0.0, 0.0});
  REQUIRE_THAT(val, WithinAbs(0.25 - 0.5 * std::log(2.0), 1e-15));
  REQUIRE(val <= 0.0);

  // scan across both branches of the quadratic extension
  auto phi = TailFunction::exponential();
  auto qloss = make_quadratic_extension(phi);
  auto dist = make_bigT_instance(1.0 / 16.0, 50);
  auto qdata = sample_dataset(dist, 50, 3);
  for (double a : {-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0})
    for (double b : {-4.0, 0.0, 4.0}) {
      REQUIRE(grad_norm_check(qloss, qdata, {a, b, 0.3 * a}) <= 1e-10);
    }

  // far along the margin both terms vanish
  auto [unit, margin] = dist.normalized_witness();
  Vector far = unit;
  for (double& v : far) v *= 200.0;
  double far_val = grad_norm_check(qloss, qdata, far);
  REQUIRE(std::abs(far_val) < 1e-8);
}

TEST_CASE("norm and optimization-error caps hold along real runs") {
  auto phi = TailFunction::exponential();
  auto loss = make_quadratic_extension(phi);
  auto dist = make_bigT_instance(1.0 / 16.0, 64);
  auto data = sample_dataset(dist, 64, 21);
  double eta = 0.5;
  for (long long T : {1LL, 10LL, 1000LL}) {
    auto traj = run_gd(loss, data, eta, T);
    for (double eps : {0.5, 0.05, 1e-4}) {
      Vector wse = reference_point(phi, dist, eps);
      double wn = norm(wse);
      REQUIRE(traj.final_norm <= norm_bound(wn, eta, eps, T) + 1e-9);
      REQUIRE(traj.final_emp_risk <= opt_error_bound(wn, eta, eps, T) + 1e-9);
    }
  }
}

TEST_CASE("sgd pathwise regret against the reference point") {
  auto phi = TailFunction::exponential();
  auto loss = make_linear_extension(phi);
  auto dist = make_smallT_instance(phi, 1.0 / 16.0, 1.0 / 16.0, 0.5, 2000);
  auto data = sample_dataset(dist, 400, 9);
  long long T = 2000;
  auto traj = run_sgd(loss, data, 0.5, T, 31);
  for (double eps : {0.1, 0.01}) {
    Vector wse = reference_point(phi, dist, eps);
    double regret = traj.realized_loss_mean - traj.comparator_loss_mean(loss, data, wse);
    double cap = dot(wse, wse) / (2.0 * 0.5 * static_cast<double>(T));
    REQUIRE(regret <= cap + 1e-9);
  }
  // norm of the average iterate obeys the same cap as gd
  for (double eps : {0.1, 0.01}) {
    Vector wse = reference_point(phi, dist, eps);
    REQUIRE(traj.final_norm <= norm_bound(norm(wse), 0.5, eps, T) + 1e-9);
  }
}
