#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sepgd/data.hpp"
#include "sepgd/loss.hpp"
#include "sepgd/rng.hpp"
#include "sepgd/stats.hpp"

namespace sepgd {

enum class Algo { gd, sgd };

inline const char* to_string(Algo a) { return a == Algo::gd ? "gd" : "sgd"; }

struct StepRecord {
  long long t = 0;
  double norm = 0.0;
  double emp_risk = 0.0;
};

/// Iterate history and diagnostics of one training run. `final_model` is w_T
/// for GD and the average iterate for SGD. `max_ascent` tracks the largest
/// per-step increase of the empirical risk along a GD run (exactly 0 up to
/// rounding when eta <= 1/(2 beta)). The SGD fields keep just enough of the
/// realized index sequence to evaluate pathwise regret against any fixed
/// comparator.
struct Trajectory {
  Algo algo = Algo::gd;
  double eta = 0.0;
  long long steps = 0;
  std::uint64_t seed = 0;
  Vector final_model;
  double final_norm = 0.0;
  double final_emp_risk = 0.0;
  double max_ascent = 0.0;                // gd only
  double realized_loss_mean = 0.0;        // sgd: (1/T) sum_t l(w_t . z_{i_t})
  std::vector<long long> drawn_counts;    // sgd: per-support draw counts
  std::vector<StepRecord> history;        // per-step summaries when recorded

  /// (1/T) sum_t l(w . z_{i_t}) for a fixed comparator w over the realized
  /// index sequence of an SGD run.
  double comparator_loss_mean(const LossFunction& loss, const Dataset& data,
                              const Vector& w) const {
    if (algo != Algo::sgd) throw std::logic_error("comparator_loss_mean: SGD runs only");
    KahanSum s;
    const auto& support = data.distribution().support();
    for (std::size_t j = 0; j < support.size(); ++j) {
      if (drawn_counts[j] == 0) continue;
      s.add(static_cast<double>(drawn_counts[j]) * loss.value(dot(w, support[j])));
    }
    return s.value() / static_cast<double>(steps);
  }
};

struct TrainOptions {
  bool record_history = true;
  // With record_history set, runs longer than this keep every stride-th step
  // instead of all of them.
  long long history_cap = 4096;
};

namespace detail {

inline void check_step_size(double eta, const LossFunction& loss) {
  double limit = 0.5 / loss.beta();
  if (!(eta > 0.0) || eta > limit * (1.0 + 1e-12))
    throw std::invalid_argument("step size must lie in (0, 1/(2 beta)]");
}

struct SupportView {
  const std::vector<Vector>* points;
  std::vector<double> weight;  // c_j / n
};

}  // namespace detail

/// Full-batch gradient descent on the empirical risk: w_1 = 0,
/// w_{t+1} = w_t - eta grad. Runs T-1 updates and returns w_T. The gradient
/// is accumulated over support points with compensated summation.
inline Trajectory run_gd(const LossFunction& loss, const Dataset& data, double eta,
                         long long steps, const TrainOptions& opts = {}) {
  detail::check_step_size(eta, loss);
  if (steps <= 0) throw std::invalid_argument("run_gd: T must be positive");
  if (data.size() == 0) throw std::invalid_argument("run_gd: empty dataset");

  const auto& support = data.distribution().support();
  std::size_t d = data.distribution().dim();
  std::size_t m = support.size();
  std::vector<double> weight(m);
  for (std::size_t j = 0; j < m; ++j)
    weight[j] = static_cast<double>(data.counts()[j]) / static_cast<double>(data.size());

  Trajectory traj;
  traj.algo = Algo::gd;
  traj.eta = eta;
  traj.steps = steps;
  long long stride = 1;
  if (opts.record_history && steps > opts.history_cap)
    stride = (steps + opts.history_cap - 1) / opts.history_cap;

  Vector w(d, 0.0);
  std::vector<double> scores(m), grad(d);
  double prev_risk = 0.0;
  for (long long t = 1; t <= steps; ++t) {
    KahanSum risk;
    for (std::size_t j = 0; j < m; ++j) {
      if (weight[j] == 0.0) { scores[j] = 0.0; continue; }
      scores[j] = dot(w, support[j]);
      risk.add(weight[j] * loss.value(scores[j]));
    }
    double emp = risk.value();
    if (t > 1) traj.max_ascent = std::max(traj.max_ascent, emp - prev_risk);
    prev_risk = emp;
    if (opts.record_history && ((t - 1) % stride == 0 || t == steps))
      traj.history.push_back({t, norm(w), emp});
    if (t == steps) {
      traj.final_emp_risk = emp;
      break;
    }
    for (std::size_t k = 0; k < d; ++k) {
      KahanSum g;
      for (std::size_t j = 0; j < m; ++j) {
        if (weight[j] == 0.0) continue;
        g.add(weight[j] * loss.slope(scores[j]) * support[j][k]);
      }
      grad[k] = g.value();
    }
    for (std::size_t k = 0; k < d; ++k) w[k] -= eta * grad[k];
  }
  traj.final_model = std::move(w);
  traj.final_norm = norm(traj.final_model);
  return traj;
}

/// SGD with replacement: at each step t = 1..T an index i_t is drawn
/// uniformly from [n], the realized loss l(w_t . z_{i_t}) is recorded, and
/// w is updated with the single-example gradient. Returns the average
/// iterate (1/T) sum_t w_t. Reproducible given the seed.
inline Trajectory run_sgd(const LossFunction& loss, const Dataset& data, double eta,
                          long long steps, std::uint64_t seed, const TrainOptions& opts = {}) {
  detail::check_step_size(eta, loss);
  if (steps <= 0) throw std::invalid_argument("run_sgd: T must be positive");
  if (data.size() == 0) throw std::invalid_argument("run_sgd: empty dataset");

  const auto& support = data.distribution().support();
  std::size_t d = data.distribution().dim();
  std::size_t m = support.size();
  std::vector<long long> cum(m);
  long long acc = 0;
  for (std::size_t j = 0; j < m; ++j) {
    acc += data.counts()[j];
    cum[j] = acc;
  }

  Trajectory traj;
  traj.algo = Algo::sgd;
  traj.eta = eta;
  traj.steps = steps;
  traj.seed = seed;
  traj.drawn_counts.assign(m, 0);
  long long stride = 1;
  if (opts.record_history && steps > opts.history_cap)
    stride = (steps + opts.history_cap - 1) / opts.history_cap;

  SplitMix64 rng(derive_key(seed, 0x736764ULL));
  Vector w(d, 0.0), avg(d, 0.0);
  KahanSum realized;
  auto n = static_cast<std::uint64_t>(data.size());
  for (long long t = 1; t <= steps; ++t) {
    auto idx = static_cast<long long>(rng.next_below(n));
    std::size_t j = 0;
    while (cum[j] <= idx) ++j;
    double s = dot(w, support[j]);
    realized.add(loss.value(s));
    traj.drawn_counts[j]++;
    for (std::size_t k = 0; k < d; ++k) avg[k] += w[k];
    if (opts.record_history && ((t - 1) % stride == 0 || t == steps))
      traj.history.push_back({t, norm(w), empirical_risk(w, loss, data)});
    if (t == steps) break;  // final update would only produce the unused w_{T+1}
    double g = loss.slope(s);
    for (std::size_t k = 0; k < d; ++k) w[k] -= eta * g * support[j][k];
  }
  for (std::size_t k = 0; k < d; ++k) avg[k] /= static_cast<double>(steps);
  traj.realized_loss_mean = realized.value() / static_cast<double>(steps);
  traj.final_model = std::move(avg);
  traj.final_norm = norm(traj.final_model);
  traj.final_emp_risk = empirical_risk(traj.final_model, loss, data);
  return traj;
}

/// ||grad Lhat(w)||^2 - 2 beta Lhat(w); nonpositive (up to rounding) for any
/// beta-smooth nonnegative loss.
inline double grad_norm_check(const LossFunction& loss, const Dataset& data, const Vector& w) {
  const auto& support = data.distribution().support();
  std::size_t d = data.distribution().dim();
  std::vector<double> grad(d, 0.0);
  KahanSum risk;
  for (std::size_t j = 0; j < support.size(); ++j) {
    if (data.counts()[j] == 0) continue;
    double frac = static_cast<double>(data.counts()[j]) / static_cast<double>(data.size());
    double s = dot(w, support[j]);
    risk.add(frac * loss.value(s));
    double g = frac * loss.slope(s);
    for (std::size_t k = 0; k < d; ++k) grad[k] += g * support[j][k];
  }
  double g2 = 0.0;
  for (double g : grad) g2 += g * g;
  return g2 - 2.0 * loss.beta() * risk.value();
}

}  // namespace sepgd
