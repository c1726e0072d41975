#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepgd/data.hpp"
#include "sepgd/tail.hpp"

namespace sepgd {

inline constexpr double kDefaultK = 1e5;

enum class BoundKind {
  norm,
  opt_error,
  upper_risk,
  lower_risk_bigT,
  lower_risk_smallT,
  lower_risk_combined,
  rademacher_gap,
  sgd_empirical,
};

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::norm: return "norm";
    case BoundKind::opt_error: return "opt_error";
    case BoundKind::upper_risk: return "upper_risk";
    case BoundKind::lower_risk_bigT: return "lower_risk_bigT";
    case BoundKind::lower_risk_smallT: return "lower_risk_smallT";
    case BoundKind::lower_risk_combined: return "lower_risk_combined";
    case BoundKind::rademacher_gap: return "rademacher_gap";
    default: return "sgd_empirical";
  }
}

/// Evaluated bound with its inputs echoed and a per-term breakdown; `value`
/// is the sum of terms unless the kind documents another combination (the
/// combined lower bound takes the max of its branches).
struct BoundReport {
  BoundKind kind = BoundKind::norm;
  std::map<std::string, double> inputs;
  std::vector<std::pair<std::string, double>> terms;
  double value = 0.0;

  double term(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return v;
    throw std::out_of_range("BoundReport: unknown term " + name);
  }
};

/// Scaled separator w*_eps = (phi^{-1}(eps) / gamma) w*, for a unit witness
/// w* certifying margin gamma. Every support point of such a distribution
/// then satisfies l(w*_eps . z) <= eps for any loss dominated by phi.
inline Vector reference_point(const TailFunction& phi, double gamma, double eps,
                              const Vector& w_star_unit) {
  if (!(gamma > 0.0)) throw std::invalid_argument("reference_point: gamma must be positive");
  double wn = norm(w_star_unit);
  if (std::abs(wn - 1.0) > 1e-9)
    throw std::invalid_argument("reference_point: witness must be unit length");
  double scale = tail_inverse(phi, eps) / gamma;
  Vector out(w_star_unit);
  for (double& v : out) v *= scale;
  return out;
}

/// Reference point for a distribution, built from its normalized witness and
/// the margin that witness actually certifies.
inline Vector reference_point(const TailFunction& phi, const DiscreteDistribution& dist,
                              double eps) {
  auto [unit, margin] = dist.normalized_witness();
  return reference_point(phi, margin, eps, unit);
}

/// 2 ||w*_eps|| + 2 sqrt(eta eps T): deterministic cap on ||w_T|| (GD) and on
/// the SGD average iterate.
inline double norm_bound(double wstar_eps_norm, double eta, double eps, long long steps) {
  if (steps <= 0) throw std::invalid_argument("norm_bound: T must be positive");
  if (wstar_eps_norm < 0.0 || eta < 0.0 || eps < 0.0)
    throw std::invalid_argument("norm_bound: inputs must be nonnegative");
  return 2.0 * wstar_eps_norm + 2.0 * std::sqrt(eta * eps * static_cast<double>(steps));
}

/// ||w*_eps||^2 / (eta T) + 2 eps: deterministic cap on the final empirical
/// risk of GD.
inline double opt_error_bound(double wstar_eps_norm, double eta, double eps, long long steps) {
  if (steps <= 0 || !(eta > 0.0))
    throw std::invalid_argument("opt_error_bound: eta and T must be positive");
  return wstar_eps_norm * wstar_eps_norm / (eta * static_cast<double>(steps)) + 2.0 * eps;
}

/// High-probability risk bound for GD (three terms, confidence 1 - delta).
/// eps is the largest admissible value produced by solve_epsilon_upper; beta
/// defaults to the tail's smoothness constant.
inline BoundReport upper_risk_bound(const TailFunction& phi, double gamma, double eta,
                                    long long steps, long long n, double delta,
                                    double K = kDefaultK,
                                    std::optional<double> beta_override = std::nullopt) {
  if (n <= 0) throw std::invalid_argument("upper_risk_bound: n must be positive");
  if (!(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("upper_risk_bound: delta must lie in (0,1)");
  double beta = beta_override.value_or(phi.beta());
  double eps = solve_epsilon_upper(phi, EpsilonCondition::upper(gamma, eta, steps));
  double r = tail_inverse(phi, eps);
  double g2 = gamma * gamma;
  double T = static_cast<double>(steps);
  double N = static_cast<double>(n);
  double logn = std::log(N);
  double logd = std::log(1.0 / delta);

  BoundReport rep;
  rep.kind = BoundKind::upper_risk;
  rep.inputs = {{"gamma", gamma}, {"eta", eta},   {"T", T},       {"n", N},
                {"delta", delta}, {"K", K},       {"beta", beta}, {"eps", eps},
                {"r_eps", r}};
  double t1 = 4.0 * K * r * r / (g2 * eta * T);
  double t2 = 32.0 * K * beta * r * r * (logn * logn * logn + 4.0 * logd) / (g2 * N);
  double t3 = 4.0 * K * r * r * logd / (g2 * eta * T * N);
  rep.terms = {{"optimization", t1}, {"complexity", t2}, {"confidence", t3}};
  rep.value = t1 + t2 + t3;
  return rep;
}

/// Large-T branch of the risk lower bound with the proof-level constants:
/// (1/(120 e n)) * (beta / (1152 gamma^2)) * (phi^{-1}(128 eps))^2.
inline double lower_bigT_value(const TailFunction& phi, double gamma, long long n, double beta,
                               double eps) {
  if (128.0 * eps > phi.value_at_zero())
    throw std::domain_error("lower_bigT_value: 128*eps exceeds phi(0)");
  double r = tail_inverse(phi, 128.0 * eps);
  return (1.0 / (120.0 * std::numbers::e * static_cast<double>(n))) *
         (beta / (1152.0 * gamma * gamma)) * r * r;
}

/// Small-T branch with the proof-level constant:
/// (phi^{-1}(8 eps))^2 / (1152 gamma^2 T eta).
inline double lower_smallT_value(const TailFunction& phi, double gamma, double eta,
                                 long long steps, double eps) {
  if (8.0 * eps > phi.value_at_zero())
    throw std::domain_error("lower_smallT_value: 8*eps exceeds phi(0)");
  double r = tail_inverse(phi, 8.0 * eps);
  return r * r / (1152.0 * gamma * gamma * static_cast<double>(steps) * eta);
}

/// Expected-risk lower bound. Both branch values are evaluated at the
/// largest eps <= 1/256 admissible for the reversed step-count condition
/// (which is where the large-T branch is valid); the combined value is their
/// max. The small-T branch is additionally reported at eps = 1/16, the
/// regime its separate derivation covers; `smallT_condition_holds` echoes
/// whether eta gamma^2 T <= (phi^{-1}(1/16))^2 / (1/16) there.
inline BoundReport lower_risk_bound(const TailFunction& phi, double gamma, double eta,
                                    long long steps, long long n, double beta) {
  if (n < 35) throw std::invalid_argument("lower_risk_bound: n must be >= 35");
  double eps = solve_epsilon_lower(phi, EpsilonCondition::lower(gamma, eta, steps));
  double big = lower_bigT_value(phi, gamma, n, beta, eps);
  double small = lower_smallT_value(phi, gamma, eta, steps, eps);

  BoundReport rep;
  rep.kind = BoundKind::lower_risk_combined;
  rep.inputs = {{"gamma", gamma}, {"eta", eta},   {"T", static_cast<double>(steps)},
                {"n", static_cast<double>(n)},    {"beta", beta}, {"eps", eps}};
  rep.terms = {{"big_T", big}, {"small_T", small}};
  rep.value = std::max(big, small);

  const double eps_small = 1.0 / 16.0;
  if (8.0 * eps_small <= phi.value_at_zero()) {
    rep.terms.emplace_back("small_T_at_sixteenth",
                           lower_smallT_value(phi, gamma, eta, steps, eps_small));
    double cond = epsilon_condition_value(phi, eps_small);
    rep.inputs["smallT_condition_holds"] =
        (eta * gamma * gamma * static_cast<double>(steps) <= cond) ? 1.0 : 0.0;
  }
  return rep;
}

/// Uniform-convergence gap bound for smooth nonnegative losses over a norm
/// ball: with R_n = radius / sqrt(n),
///   emp + K ( sqrt(emp) (sqrt(beta) log^{1.5}(n) R_n + sqrt(b log(1/delta)/n))
///             + beta log^3(n) R_n^2 + b log(1/delta)/n ).
inline double rademacher_gap_bound(double emp_risk, double b, double beta, double radius,
                                   long long n, double delta, double K = kDefaultK) {
  if (emp_risk < 0.0 || b < 0.0 || beta < 0.0 || radius < 0.0)
    throw std::invalid_argument("rademacher_gap_bound: inputs must be nonnegative");
  if (n <= 0) throw std::invalid_argument("rademacher_gap_bound: n must be positive");
  if (!(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("rademacher_gap_bound: delta must lie in (0,1)");
  double N = static_cast<double>(n);
  double rn = radius / std::sqrt(N);
  double logn = std::log(N);
  double logd = std::log(1.0 / delta);
  double log15 = std::pow(logn, 1.5);
  return emp_risk + K * (std::sqrt(emp_risk) * (std::sqrt(beta) * log15 * rn +
                                                std::sqrt(b * logd / N)) +
                         beta * logn * logn * logn * rn * rn + b * logd / N);
}

/// High-probability empirical-risk bound for the SGD average iterate:
///   ||w*_eps||^2/(eta T) + 3 eps + (8 b / T) log(1/delta),
/// with b = 3 eps + 16 beta ||w*_eps||^2 + 16 eta eps T.
inline double sgd_empirical_bound(double wstar_eps_norm, double eta, double eps,
                                  long long steps, double beta, double delta) {
  if (steps <= 0 || !(eta > 0.0))
    throw std::invalid_argument("sgd_empirical_bound: eta and T must be positive");
  if (!(delta > 0.0) || delta > 1.0)
    throw std::invalid_argument("sgd_empirical_bound: delta must lie in (0,1]");
  double T = static_cast<double>(steps);
  double w2 = wstar_eps_norm * wstar_eps_norm;
  double b = 3.0 * eps + 16.0 * beta * w2 + 16.0 * eta * eps * T;
  return w2 / (eta * T) + 3.0 * eps + (8.0 * b / T) * std::log(1.0 / delta);
}

/// Closed-form rate for one tail family at (T, n), with the predicted
/// log-log slopes. `slope_T_local` includes the slowly varying log factors
/// evaluated at T; `slope_T_power` is the pure power-law exponent.
struct RateEntry {
  TailFamily family = TailFamily::exponential;
  double alpha = 0.0;
  std::string t_term;
  std::string n_term;
  double t_value = 0.0;
  double n_value = 0.0;
  double slope_T_power = -1.0;
  double slope_T_local = -1.0;
  double slope_n = -1.0;

  double total() const { return t_value + n_value; }
};

inline RateEntry rate_table(TailFamily family, double alpha, double gamma, long long steps,
                            long long n) {
  if (!(gamma > 0.0)) throw std::invalid_argument("rate_table: gamma must be positive");
  if (steps < 2 || n < 1) throw std::invalid_argument("rate_table: need T >= 2 and n >= 1");
  double T = static_cast<double>(steps);
  double N = static_cast<double>(n);
  double g2 = gamma * gamma;
  RateEntry e;
  e.family = family;
  e.alpha = alpha;
  switch (family) {
    case TailFamily::exponential: {
      double l2 = std::log(T) * std::log(T);
      e.t_term = "log^2(T) / (gamma^2 T)";
      e.n_term = "log^2(T) / (gamma^2 n)";
      e.t_value = l2 / (g2 * T);
      e.n_value = l2 / (g2 * N);
      e.slope_T_power = -1.0;
      e.slope_T_local = -1.0 + 2.0 / std::log(T);
      e.slope_n = -1.0;
      break;
    }
    case TailFamily::polynomial: {
      if (!(alpha >= 1.0)) throw std::invalid_argument("rate_table: polynomial needs alpha >= 1");
      double expo = alpha / (2.0 + alpha);
      double pref = std::pow(1.0 / gamma, 2.0 * alpha / (2.0 + alpha));
      e.t_term = "(1/gamma)^(2a/(2+a)) T^(-a/(2+a))";
      e.n_term = "(1/gamma)^(2a/(2+a)) T^(2/(2+a)) / n";
      e.t_value = pref * std::pow(T, -expo);
      e.n_value = pref * std::pow(T, 2.0 / (2.0 + alpha)) / N;
      e.slope_T_power = -expo;
      e.slope_T_local = -expo;
      e.slope_n = -1.0;
      break;
    }
    case TailFamily::stretched_exponential: {
      if (!(alpha > 1.0))
        throw std::invalid_argument("rate_table: stretched_exponential needs alpha > 1");
      double l = std::pow(std::log(T), 2.0 / alpha);
      e.t_term = "log^(2/a)(T) / (gamma^2 T)";
      e.n_term = "log^(2/a)(T) / (gamma^2 n)";
      e.t_value = l / (g2 * T);
      e.n_value = l / (g2 * N);
      e.slope_T_power = -1.0;
      e.slope_T_local = -1.0 + (2.0 / alpha) / std::log(T);
      e.slope_n = -1.0;
      break;
    }
    default:
      throw std::invalid_argument("rate_table: no closed form for custom tails");
  }
  return e;
}

}  // namespace sepgd
