#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "sepgd/certify.hpp"
#include "sepgd/grid.hpp"

namespace sepgd {

/// Raised when a numerical routine cannot produce a value satisfying its
/// contract (failed bracketing, infeasible condition, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public NumericError {
 public:
  explicit InfeasibleError(const std::string& what, double hint = 0.0)
      : NumericError(what), hint_(hint) {}
  /// Context-dependent feasibility hint (e.g. the minimal step count that
  /// would make the condition satisfiable).
  double hint() const { return hint_; }

 private:
  double hint_ = 0.0;
};

enum class TailFamily { exponential, polynomial, stretched_exponential, custom };

inline const char* to_string(TailFamily f) {
  switch (f) {
    case TailFamily::exponential: return "exponential";
    case TailFamily::polynomial: return "polynomial";
    case TailFamily::stretched_exponential: return "stretched_exponential";
    default: return "custom";
  }
}

// Tolerances for the inverse and the epsilon solvers.
inline constexpr double kInverseRelTol = 1e-10;
inline constexpr int kInverseMaxBisect = 200;
inline constexpr int kInverseMaxExpand = 1100;  // doubling from 1 covers the double range
inline constexpr double kEpsilonRelTol = 1e-6;
inline constexpr double kEpsilonFloor = 1e-300;

/// Decay-rate descriptor: a nonnegative, strictly decreasing, convex map on
/// [0, inf) that is 1-Lipschitz and beta-smooth, normalized so that
/// value(0) >= 1/2 and |slope(0)| >= 1/2. Instances are immutable and safe to
/// share across threads.
class TailFunction {
 public:
  using Fn = std::function<double(double)>;

  TailFunction(TailFamily family, double alpha, double beta, Fn eval, Fn deriv)
      : family_(family), alpha_(alpha), beta_(beta),
        eval_(std::move(eval)), deriv_(std::move(deriv)) {
    if (!(beta_ > 0.0)) throw std::invalid_argument("TailFunction: beta must be positive");
  }

  /// phi(u); rejects negative arguments.
  double value(double u) const {
    if (u < 0.0) throw std::domain_error("TailFunction: argument must be nonnegative");
    return eval_(u);
  }
  /// phi'(u).
  double slope(double u) const {
    if (u < 0.0) throw std::domain_error("TailFunction: argument must be nonnegative");
    return deriv_(u);
  }

  double beta() const { return beta_; }
  TailFamily family() const { return family_; }
  double alpha() const { return alpha_; }
  double value_at_zero() const { return eval_(0.0); }

  /// phi(u) = e^{-u}.
  static TailFunction exponential() {
    return TailFunction(TailFamily::exponential, 0.0, 1.0,
                        [](double u) { return std::exp(-u); },
                        [](double u) { return -std::exp(-u); });
  }

  /// phi(u) = (1 + u/alpha)^{-alpha}, alpha >= 1. Decays like u^{-alpha};
  /// value_at_zero = 1, slope(0) = -1, beta = (alpha+1)/alpha.
  static TailFunction polynomial(double alpha) {
    if (!(alpha >= 1.0)) throw std::invalid_argument("polynomial tail: alpha must be >= 1");
    double beta = (alpha + 1.0) / alpha;
    return TailFunction(
        TailFamily::polynomial, alpha, beta,
        [alpha](double u) { return std::pow(1.0 + u / alpha, -alpha); },
        [alpha](double u) { return -std::pow(1.0 + u / alpha, -alpha - 1.0); });
  }

  /// phi(u) = exp(c^alpha - (c + u/lambda)^alpha) for alpha > 1, with
  /// c = ((alpha-1)/alpha)^(1/alpha) placing u = 0 at the inflection point of
  /// the unshifted profile (so phi is convex on [0, inf)) and
  /// lambda = alpha * c^(alpha-1) normalizing slope(0) to -1 (which is also
  /// the global Lipschitz constant, since |phi'| is maximal at 0 for a convex
  /// decreasing function). Decays like exp(-Theta(u^alpha)).
  static TailFunction stretched_exponential(double alpha) {
    if (!(alpha > 1.0))
      throw std::invalid_argument("stretched_exponential tail: alpha must be > 1");
    double c = std::pow((alpha - 1.0) / alpha, 1.0 / alpha);
    double lambda = alpha * std::pow(c, alpha - 1.0);
    double ca = std::pow(c, alpha);
    auto eval = [alpha, c, lambda, ca](double u) {
      return std::exp(ca - std::pow(c + u / lambda, alpha));
    };
    auto deriv = [alpha, c, lambda, ca](double u) {
      double v = c + u / lambda;
      return -(alpha / lambda) * std::pow(v, alpha - 1.0) * std::exp(ca - std::pow(v, alpha));
    };
    // The largest curvature sits at an interior point; locate it by a coarse
    // scan plus ternary refinement. second(u) is exact, so the located
    // maximum bounds every divided difference of the derivative.
    auto second = [alpha, c, lambda, ca](double u) {
      double v = c + u / lambda;
      double q = (alpha * alpha) * std::pow(v, 2.0 * alpha - 2.0) -
                 alpha * (alpha - 1.0) * std::pow(v, alpha - 2.0);
      return (q / (lambda * lambda)) * std::exp(ca - std::pow(v, alpha));
    };
    double lo = 0.0, hi = 0.0, best = 0.0, best_u = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      double u = 10.0 * static_cast<double>(i) / 4000.0;
      double s = second(u);
      if (s > best) { best = s; best_u = u; }
    }
    lo = std::max(0.0, best_u - 0.01);
    hi = best_u + 0.01;
    for (int it = 0; it < 200; ++it) {
      double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (second(m1) < second(m2)) lo = m1; else hi = m2;
    }
    double beta = second(0.5 * (lo + hi));
    beta += 4.0 * std::abs(beta) * std::numeric_limits<double>::epsilon();
    return TailFunction(TailFamily::stretched_exponential, alpha, beta,
                        std::move(eval), std::move(deriv));
  }

  static TailFunction custom(Fn eval, Fn deriv, double beta) {
    return TailFunction(TailFamily::custom, 0.0, beta, std::move(eval), std::move(deriv));
  }

 private:
  TailFamily family_;
  double alpha_;
  double beta_;
  Fn eval_;
  Fn deriv_;
};

inline double eval_tail(const TailFunction& phi, double u) { return phi.value(u); }

/// Invert the strictly decreasing phi by bracket expansion and bisection:
/// returns u >= 0 with |phi(u) - eps| <= kInverseRelTol * eps.
inline double tail_inverse(const TailFunction& phi, double eps) {
  double phi0 = phi.value_at_zero();
  if (!(eps > 0.0) || eps > phi0)
    throw std::domain_error("tail_inverse: eps must lie in (0, phi(0)]");
  if (eps == phi0) return 0.0;
  double lo = 0.0, hi = 1.0;
  int expansions = 0;
  while (phi.value(hi) > eps) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > kInverseMaxExpand)
      throw NumericError("tail_inverse: failed to bracket eps after max expansions");
  }
  double tol = kInverseRelTol * eps;
  for (int it = 0; it < kInverseMaxBisect; ++it) {
    double mid = 0.5 * (lo + hi);
    double v = phi.value(mid);
    if (std::abs(v - eps) <= tol) return mid;
    if (v > eps) lo = mid; else hi = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, hi))
      return 0.5 * (lo + hi);
  }
  return 0.5 * (lo + hi);
}

/// Default certificate grid: u_max stretches five inverse-scales past the
/// point where phi has dropped to 1e-12.
inline GridSpec default_tail_grid(const TailFunction& phi) {
  GridSpec g;
  g.u_max = std::max(20.0, 5.0 * tail_inverse(phi, 1e-12));
  return g;
}

/// Grid certificate for the tail axioms. Violations are reported, never
/// thrown; `pass` uses the report's tolerance (1e-9 by default).
inline AxiomReport check_tail_axioms(const TailFunction& phi, const GridSpec& grid) {
  auto us = grid.build();
  AxiomReport report;
  CheckItem nonneg{"nonnegative"};
  CheckItem decreasing{"strictly_decreasing"};
  CheckItem convex{"convex"};
  CheckItem lipschitz{"one_lipschitz"};
  CheckItem smooth{"beta_smooth"};
  CheckItem endpoint_value{"value_at_zero_ge_half"};
  CheckItem endpoint_slope{"slope_at_zero_ge_half"};

  double beta_slack = phi.beta() * (1.0 + 1e-6);
  double prev_v = 0.0, prev_d = 0.0, prev_u = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    double u = us[i];
    double v = phi.value(u);
    double d = phi.slope(u);
    nonneg.record(-v, u);
    lipschitz.record(std::abs(d) - 1.0, u);
    if (i > 0) {
      double du = u - prev_u;
      decreasing.record(v - prev_v, u);
      convex.record(prev_d - d, u);
      if (du > 0.0) smooth.record(std::abs(d - prev_d) / du - beta_slack, u);
    }
    prev_v = v;
    prev_d = d;
    prev_u = u;
  }
  endpoint_value.record(0.5 - phi.value_at_zero(), 0.0);
  endpoint_slope.record(0.5 - std::abs(phi.slope(0.0)), 0.0);
  // Strict decrease over the whole span, not just between neighbors.
  decreasing.record(phi.value(us.back()) - phi.value_at_zero() + 0.0, us.back());

  for (CheckItem* c : {&nonneg, &decreasing, &convex, &lipschitz, &smooth,
                       &endpoint_value, &endpoint_slope}) {
    c->finalize(report.pass_tolerance);
    report.items.push_back(*c);
  }
  return report;
}

inline AxiomReport check_tail_axioms(const TailFunction& phi) {
  return check_tail_axioms(phi, default_tail_grid(phi));
}

enum class EpsilonSide { upper, lower };

/// Parameters of the admissibility condition eta * gamma^2 * T vs
/// (phi^{-1}(eps))^2 / eps, with the direction given by `side`.
struct EpsilonCondition {
  double gamma = 0.0;
  double eta = 0.0;
  long long steps = 0;
  EpsilonSide side = EpsilonSide::upper;
  double cap = 0.5;

  void validate(const TailFunction& phi) const {
    if (!(gamma > 0.0) || !(eta > 0.0) || steps <= 0)
      throw std::invalid_argument("EpsilonCondition: gamma, eta, T must be positive");
    if (!(cap > 0.0) || cap > phi.value_at_zero())
      throw std::invalid_argument("EpsilonCondition: cap must lie in (0, phi(0)]");
  }

  double target() const {
    return eta * gamma * gamma * static_cast<double>(steps);
  }

  static EpsilonCondition upper(double gamma, double eta, long long steps, double cap = 0.5) {
    return {gamma, eta, steps, EpsilonSide::upper, cap};
  }
  static EpsilonCondition lower(double gamma, double eta, long long steps,
                                double cap = 1.0 / 256.0) {
    return {gamma, eta, steps, EpsilonSide::lower, cap};
  }
};

/// (phi^{-1}(eps))^2 / eps — strictly decreasing in eps, grows without bound
/// as eps -> 0.
inline double epsilon_condition_value(const TailFunction& phi, double eps) {
  double r = tail_inverse(phi, eps);
  return r * r / eps;
}

/// Largest eps <= cap with eta*gamma^2*T <= (phi^{-1}(eps))^2 / eps.
/// Returns cap when the condition already holds there; otherwise bisects in
/// log(eps) and returns the feasible side of the boundary.
inline double solve_epsilon_upper(const TailFunction& phi, const EpsilonCondition& cond) {
  if (cond.side != EpsilonSide::upper)
    throw std::invalid_argument("solve_epsilon_upper: condition side must be 'upper'");
  cond.validate(phi);
  double target = cond.target();
  if (epsilon_condition_value(phi, cond.cap) >= target) return cond.cap;
  if (epsilon_condition_value(phi, kEpsilonFloor) < target)
    throw InfeasibleError("solve_epsilon_upper: no feasible eps above the floor");
  double llo = std::log(kEpsilonFloor);  // feasible side
  double lhi = std::log(cond.cap);       // infeasible side
  while (lhi - llo > kEpsilonRelTol) {
    double lm = 0.5 * (llo + lhi);
    if (epsilon_condition_value(phi, std::exp(lm)) >= target) llo = lm; else lhi = lm;
  }
  return std::exp(llo);
}

/// Minimal step count making the reversed condition feasible at eps = cap.
inline long long minimal_feasible_steps_lower(const TailFunction& phi, double gamma,
                                              double eta, double cap = 1.0 / 256.0) {
  double need = epsilon_condition_value(phi, cap) / (eta * gamma * gamma);
  return static_cast<long long>(std::ceil(need - 1e-9));
}

/// Largest eps <= cap with eta*gamma^2*T >= (phi^{-1}(eps))^2 / eps. The
/// condition is easiest at cap, so the answer is cap whenever feasible;
/// otherwise an InfeasibleError carries the minimal T that would work.
inline double solve_epsilon_lower(const TailFunction& phi, const EpsilonCondition& cond) {
  if (cond.side != EpsilonSide::lower)
    throw std::invalid_argument("solve_epsilon_lower: condition side must be 'lower'");
  cond.validate(phi);
  double target = cond.target();
  if (epsilon_condition_value(phi, cond.cap) <= target) return cond.cap;
  throw InfeasibleError(
      "solve_epsilon_lower: condition infeasible at the cap; needs T >= " +
          std::to_string(minimal_feasible_steps_lower(phi, cond.gamma, cond.eta, cond.cap)),
      static_cast<double>(minimal_feasible_steps_lower(phi, cond.gamma, cond.eta, cond.cap)));
}

}  // namespace sepgd
