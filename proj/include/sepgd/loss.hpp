#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sepgd/certify.hpp"
#include "sepgd/grid.hpp"
#include "sepgd/tail.hpp"

namespace sepgd {

enum class LossKind { quadratic_extension, linear_extension, logistic, squared_hinge, custom };

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::quadratic_extension: return "quadratic_extension";
    case LossKind::linear_extension: return "linear_extension";
    case LossKind::logistic: return "logistic";
    case LossKind::squared_hinge: return "squared_hinge";
    default: return "custom";
  }
}

/// Scalar classification loss: nonnegative, convex, beta-smooth, decreasing.
/// When built from a tail function the loss is dominated by it on u >= 0 and
/// carries it along for certification.
class LossFunction {
 public:
  using Fn = std::function<double(double)>;

  LossFunction(LossKind kind, double beta, Fn eval, Fn deriv,
               std::optional<TailFunction> source_tail = std::nullopt)
      : kind_(kind), beta_(beta), eval_(std::move(eval)), deriv_(std::move(deriv)),
        source_tail_(std::move(source_tail)) {
    if (!(beta_ > 0.0)) throw std::invalid_argument("LossFunction: beta must be positive");
  }

  double value(double u) const { return eval_(u); }
  double slope(double u) const { return deriv_(u); }
  double beta() const { return beta_; }
  LossKind kind() const { return kind_; }
  const std::optional<TailFunction>& source_tail() const { return source_tail_; }

 private:
  LossKind kind_;
  double beta_;
  Fn eval_;
  Fn deriv_;
  std::optional<TailFunction> source_tail_;
};

namespace detail {
inline void require_valid_tail(const TailFunction& phi, const char* who) {
  AxiomReport rep = check_tail_axioms(phi);
  if (!rep.all_pass()) {
    std::string msg = std::string(who) + ": tail function fails axiom certificate (";
    for (const auto& f : rep.failures()) msg += f + " ";
    msg += ")";
    throw std::invalid_argument(msg);
  }
}
}  // namespace detail

/// Loss equal to phi on the positive axis, extended by its second-order
/// Taylor model for negative arguments:
///   l(x) = phi(0) + phi'(0) x + (beta/2) x^2,  x < 0.
/// Value and slope are continuous at the splice and the result stays in the
/// phi-tailed class with the same beta.
inline LossFunction make_quadratic_extension(const TailFunction& phi) {
  detail::require_valid_tail(phi, "make_quadratic_extension");
  double v0 = phi.value_at_zero();
  double d0 = phi.slope(0.0);
  double beta = phi.beta();
  TailFunction tail = phi;
  auto eval = [tail, v0, d0, beta](double x) {
    return x >= 0.0 ? tail.value(x) : v0 + d0 * x + 0.5 * beta * x * x;
  };
  auto deriv = [tail, d0, beta](double x) {
    return x >= 0.0 ? tail.slope(x) : d0 + beta * x;
  };
  return LossFunction(LossKind::quadratic_extension, beta, std::move(eval), std::move(deriv), phi);
}

/// Loss equal to phi on the positive axis with the tangent-line extension
///   l(x) = phi(0) + phi'(0) x,  x < 0.
/// 1-Lipschitz since |phi'| <= 1.
inline LossFunction make_linear_extension(const TailFunction& phi) {
  detail::require_valid_tail(phi, "make_linear_extension");
  double v0 = phi.value_at_zero();
  double d0 = phi.slope(0.0);
  TailFunction tail = phi;
  auto eval = [tail, v0, d0](double x) { return x >= 0.0 ? tail.value(x) : v0 + d0 * x; };
  auto deriv = [tail, d0](double x) { return x >= 0.0 ? tail.slope(x) : d0; };
  return LossFunction(LossKind::linear_extension, phi.beta(), std::move(eval), std::move(deriv),
                      phi);
}

/// Logistic loss log(1 + e^{-u}); beta = 1/4, dominated by e^{-u} on u >= 0.
inline LossFunction make_logistic() {
  auto eval = [](double u) {
    // Stable in both directions: log1p(e^{-u}) for u >= 0, -u + log1p(e^u) else.
    return u >= 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
  };
  auto deriv = [](double u) {
    return u >= 0.0 ? -std::exp(-u) / (1.0 + std::exp(-u)) : -1.0 / (1.0 + std::exp(u));
  };
  return LossFunction(LossKind::logistic, 0.25, std::move(eval), std::move(deriv),
                      TailFunction::exponential());
}

/// Squared hinge max(0, 1-u)^2; beta = 2. Not certified against any built-in
/// tail by default.
inline LossFunction make_squared_hinge() {
  auto eval = [](double u) {
    double m = std::max(0.0, 1.0 - u);
    return m * m;
  };
  auto deriv = [](double u) { return u < 1.0 ? -2.0 * (1.0 - u) : 0.0; };
  return LossFunction(LossKind::squared_hinge, 2.0, std::move(eval), std::move(deriv));
}

/// Grid built for loss certificates: linear over [-10, linear_limit] plus the
/// log-spaced far tail of the tail grid.
inline std::vector<double> build_loss_grid(const GridSpec& grid) {
  GridSpec g = grid;
  g.u_min = -10.0;
  return g.build();
}

/// Membership certificate for the phi-tailed class: the four class
/// properties, domination by phi on u >= 0, the self-bounded-gradient and
/// two-point smoothness inequalities, and a finite-difference check of the
/// stored derivative.
inline MembershipReport check_loss_class(const LossFunction& loss, const TailFunction& phi,
                                         const GridSpec& grid) {
  auto us = build_loss_grid(grid);
  MembershipReport report;
  CheckItem nonneg{"nonnegative"};
  CheckItem convex{"convex"};
  CheckItem smooth{"beta_smooth"};
  CheckItem decreasing{"decreasing"};
  CheckItem dominated{"dominated_by_tail"};
  CheckItem self_bound{"self_bounded_gradient"};
  CheckItem two_point{"two_point_smoothness"};
  CheckItem fd{"derivative_consistency"};

  double beta = loss.beta();
  double beta_slack = beta * (1.0 + 1e-6);
  double prev_v = 0.0, prev_d = 0.0, prev_u = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    double u = us[i];
    double v = loss.value(u);
    double d = loss.slope(u);
    nonneg.record(-v, u);
    self_bound.record(d * d - 2.0 * beta * v - 1e-12, u);
    if (u >= 0.0) dominated.record(v - phi.value(u), u);
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

  // Finite differences on a span where h = 1e-5 is meaningful.
  const double h = 1e-5;
  for (int i = 0; i <= 600; ++i) {
    double u = -10.0 + 30.0 * static_cast<double>(i) / 600.0;
    double est = (loss.value(u + h) - loss.value(u - h)) / (2.0 * h);
    fd.record(std::abs(loss.slope(u) - est) - 10.0 * beta * h, u);
  }

  // Sampled pairs for l(x) <= 2 l(y) + beta (x-y)^2.
  std::size_t stride = std::max<std::size_t>(1, us.size() / 192);
  for (std::size_t i = 0; i < us.size(); i += stride) {
    for (std::size_t j = 0; j < us.size(); j += stride) {
      double x = us[i], y = us[j];
      double lhs = loss.value(x);
      double rhs = 2.0 * loss.value(y) + beta * (x - y) * (x - y);
      double scale = std::max(1.0, std::abs(rhs));
      two_point.record((lhs - rhs) / scale, x);
    }
  }

  for (CheckItem* c : {&nonneg, &convex, &smooth, &decreasing, &dominated, &self_bound,
                       &two_point, &fd}) {
    c->finalize(report.pass_tolerance);
    report.items.push_back(*c);
  }
  return report;
}

inline MembershipReport check_loss_class(const LossFunction& loss, const TailFunction& phi) {
  return check_loss_class(loss, phi, default_tail_grid(phi));
}

}  // namespace sepgd
