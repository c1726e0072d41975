#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sepgd/loss.hpp"

using namespace sepgd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("quadratic extension values") {
  auto loss = make_quadratic_extension(TailFunction::exponential());
  REQUIRE_THAT(loss.value(-1.0), WithinAbs(2.5, 1e-15));  // 1 + 1 + 0.5
  REQUIRE_THAT(loss.value(0.0), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(loss.slope(0.0), WithinAbs(-1.0, 1e-15));
  REQUIRE_THAT(loss.value(2.0), WithinRel(std::exp(-2.0), 1e-15));
  REQUIRE(loss.beta() == 1.0);
  REQUIRE(loss.kind() == LossKind::quadratic_extension);
  REQUIRE(loss.source_tail().has_value());

  // splice continuity
  REQUIRE_THAT(loss.value(-1e-12), WithinAbs(loss.value(0.0), 1e-11));
  REQUIRE_THAT(loss.slope(-1e-12), WithinAbs(loss.slope(0.0), 1e-11));
}

TEST_CASE("linear extension values") {
  auto loss = make_linear_extension(TailFunction::exponential());
  REQUIRE_THAT(loss.value(-2.0), WithinAbs(3.0, 1e-15));  // 1 + 2
  REQUIRE_THAT(loss.value(0.0), WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(loss.value(std::log(2.0)), WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(loss.slope(-5.0), WithinAbs(-1.0, 1e-15));
}

TEST_CASE("logistic loss") {
  auto loss = make_logistic();
  REQUIRE_THAT(loss.value(0.0), WithinAbs(std::log(2.0), 1e-15));
  REQUIRE_THAT(loss.slope(0.0), WithinAbs(-0.5, 1e-15));
  REQUIRE(loss.beta() == 0.25);
  REQUIRE(loss.value(5.0) <= std::exp(-5.0));
  // numerically stable far out on both sides
  REQUIRE(std::isfinite(loss.value(800.0)));
  REQUIRE(loss.value(800.0) >= 0.0);
  REQUIRE_THAT(loss.value(-800.0), WithinRel(800.0, 1e-12));
  REQUIRE_THAT(loss.slope(-800.0), WithinAbs(-1.0, 1e-12));
}

TEST_CASE("extensions reject tails that fail the axioms") {
  auto gauss = TailFunction::custom([](double u) { return std::exp(-u * u); },
                                    [](double u) { return -2.0 * u * std::exp(-u * u); }, 2.0);
  REQUIRE_THROWS_AS(make_quadratic_extension(gauss), std::invalid_argument);
  REQUIRE_THROWS_AS(make_linear_extension(gauss), std::invalid_argument);
}

TEST_CASE("class membership certificates pass for the built-ins") {
  auto certify = [](const LossFunction& loss, const TailFunction& phi) {
    MembershipReport rep = check_loss_class(loss, phi);
    INFO(to_string(loss.kind()) << " vs " << to_string(phi.family()) << " alpha=" << phi.alpha());
    CHECK(rep.all_pass());
    CHECK(rep.worst() <= 1e-9);
  };
  for (const auto& phi : {TailFunction::exponential(), TailFunction::polynomial(2.0),
                          TailFunction::stretched_exponential(2.0)}) {
    certify(make_quadratic_extension(phi), phi);
    certify(make_linear_extension(phi), phi);
  }
  certify(make_logistic(), TailFunction::exponential());
}

TEST_CASE("hinge fails the smoothness certificate at the kink") {
  auto hinge = LossFunction(
      LossKind::custom, 1.0, [](double u) { return std::max(0.0, 1.0 - u); },
      [](double u) { return u < 1.0 ? -1.0 : 0.0; });
  MembershipReport rep = check_loss_class(hinge, TailFunction::exponential());
  REQUIRE_FALSE(rep.all_pass());
  const CheckItem* smooth = rep.find("beta_smooth");
  REQUIRE(smooth != nullptr);
  REQUIRE_FALSE(smooth->pass);
  REQUIRE_THAT(smooth->location, WithinAbs(1.0, 0.05));
  // hinge additionally dominates nothing exponential near 0: l(0)=1=phi(0) is
  // fine, but derivative consistency at the kink also trips
  REQUIRE(rep.find("nonnegative")->pass);
}

TEST_CASE("extension losses equal the tail on the positive axis") {
  for (const auto& phi : {TailFunction::exponential(), TailFunction::polynomial(2.0)}) {
    auto quad = make_quadratic_extension(phi);
    auto lin = make_linear_extension(phi);
    for (double u : {0.0, 0.3, 1.0, 7.5, 19.0}) {
      REQUIRE(quad.value(u) == phi.value(u));
      REQUIRE(lin.value(u) == phi.value(u));
      REQUIRE(quad.slope(u) == phi.slope(u));
    }
  }
}

TEST_CASE("asymptotic growth of the extensions") {
  auto quad = make_quadratic_extension(TailFunction::exponential());
  auto lin = make_linear_extension(TailFunction::exponential());
  double x = -1e3;
  double quad_ratio = quad.value(x) / (0.5 * quad.beta() * x * x);
  double lin_ratio = lin.value(x) / (1.0 * -x);
  REQUIRE(quad_ratio >= 1.0);
  REQUIRE(quad_ratio <= 1.01);
  REQUIRE(lin_ratio >= 1.0);
  REQUIRE(lin_ratio <= 1.01);
}

TEST_CASE("self-bounded gradient on a dense grid") {
  for (const auto& loss : {make_quadratic_extension(TailFunction::polynomial(2.0)),
                           make_linear_extension(TailFunction::exponential()), make_logistic(),
                           make_squared_hinge()}) {
    for (int i = 0; i <= 3000; ++i) {
      double u = -10.0 + 30.0 * i / 3000.0;
      double d = loss.slope(u);
      REQUIRE(d * d <= 2.0 * loss.beta() * loss.value(u) + 1e-12);
    }
  }
}

TEST_CASE("finite differences agree with stored derivatives") {
  const double h = 1e-5;
  for (const auto& loss : {make_quadratic_extension(TailFunction::exponential()),
                           make_linear_extension(TailFunction::polynomial(2.0)),
                           make_logistic()}) {
    for (int i = 0; i <= 300; ++i) {
      double u = -10.0 + 30.0 * i / 300.0;
      double fd = (loss.value(u + h) - loss.value(u - h)) / (2.0 * h);
      REQUIRE_THAT(loss.slope(u), WithinAbs(fd, 10.0 * loss.beta() * h));
    }
  }
}

TEST_CASE("squared hinge is not strictly decreasing beyond the margin") {
  auto sh = make_squared_hinge();
  REQUIRE(sh.value(2.0) == 0.0);
  REQUIRE(sh.value(5.0) == 0.0);
  REQUIRE(sh.beta() == 2.0);
  REQUIRE_FALSE(sh.source_tail().has_value());
}
