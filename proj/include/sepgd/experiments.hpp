#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sepgd/bounds.hpp"
#include "sepgd/data.hpp"
#include "sepgd/loss.hpp"
#include "sepgd/optimize.hpp"
#include "sepgd/rng.hpp"
#include "sepgd/stats.hpp"
#include "sepgd/tail.hpp"

namespace sepgd {

// Numeric slack applied to the deterministic inequalities; anything beyond
// it counts as a violation.
inline constexpr double kLemmaSlack = 1e-9;
inline constexpr double kDescentSlack = 1e-12;

/// Thread cap: SEPGD_THREADS when set, hardware concurrency otherwise.
inline unsigned max_threads() {
  if (const char* env = std::getenv("SEPGD_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Static-partition parallel loop. Work items must be independent; results
/// should be written into preassigned slots so the output never depends on
/// the schedule.
template <typename F>
void parallel_for(std::size_t count, F&& body) {
  unsigned threads = std::min<std::size_t>(max_threads(), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&]() {
    const std::size_t chunk = 16;
    while (true) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= count) return;
      std::size_t end = std::min(count, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Everything needed to run one trial.
struct TrialConfig {
  DiscreteDistribution dist;
  LossFunction loss;
  TailFunction phi;
  std::string dist_label;
  double gamma = 0.0;  // stated margin, used in the bound formulas
  double eta = 0.0;
  long long steps = 0;
  long long n = 0;
  Algo algo = Algo::gd;
  double delta = 0.1;
  double K = kDefaultK;
};

struct ViolationFlag {
  std::string name;
  bool violated = false;
  double slack = 0.0;  // bound minus measured; negative once violated
};

/// One trial: configuration echo, measured quantities (population risk is
/// exact support summation, never sampled), attached bound values, and
/// violation flags for each inequality that applies to the run.
struct TrialResult {
  std::string tail_family;
  double tail_alpha = 0.0;
  std::string loss_kind;
  std::string dist_label;
  double gamma = 0.0;
  double eta = 0.0;
  long long steps = 0;
  long long n = 0;
  std::string algo;
  std::uint64_t seed = 0;
  double delta = 0.0;
  double K = 0.0;
  double eps_ref = 0.0;

  double norm_w = 0.0;
  double emp_risk = 0.0;
  double pop_risk = 0.0;

  double bound_norm = 0.0;
  double bound_opt_error = 0.0;
  double bound_upper = 0.0;
  double bound_sgd = std::numeric_limits<double>::quiet_NaN();
  double lower_big = std::numeric_limits<double>::quiet_NaN();
  double lower_small = std::numeric_limits<double>::quiet_NaN();

  std::vector<ViolationFlag> violations;

  bool any_deterministic_violation() const {
    for (const auto& v : violations)
      if (v.violated && v.name != "sgd_empirical" && v.name != "upper_risk") return true;
    return false;
  }
  const ViolationFlag* flag(const std::string& name) const {
    for (const auto& v : violations)
      if (v.name == name) return &v;
    return nullptr;
  }
};

namespace detail {

inline void push_flag(std::vector<ViolationFlag>& out, const std::string& name, double measured,
                      double bound, double slack_allow) {
  double slack = bound + slack_allow - measured;
  out.push_back({name, slack < 0.0, slack});
}

}  // namespace detail

/// Run one trial on an already sampled dataset. The reference scale eps_ref
/// is the largest admissible epsilon for the step-count condition; w*_eps is
/// built from the distribution's normalized witness, so its per-example loss
/// is at most eps_ref and the deterministic inequalities apply verbatim.
inline TrialResult run_trial_on(const TrialConfig& cfg, const Dataset& data,
                                std::uint64_t seed) {
  TrialResult res;
  res.tail_family = to_string(cfg.phi.family());
  res.tail_alpha = cfg.phi.alpha();
  res.loss_kind = to_string(cfg.loss.kind());
  res.dist_label = cfg.dist_label;
  res.gamma = cfg.gamma;
  res.eta = cfg.eta;
  res.steps = cfg.steps;
  res.n = cfg.n;
  res.algo = to_string(cfg.algo);
  res.seed = seed;
  res.delta = cfg.delta;
  res.K = cfg.K;

  TrainOptions opts;
  opts.record_history = false;
  Trajectory traj = cfg.algo == Algo::gd
                        ? run_gd(cfg.loss, data, cfg.eta, cfg.steps, opts)
                        : run_sgd(cfg.loss, data, cfg.eta, cfg.steps, seed, opts);

  res.norm_w = traj.final_norm;
  res.emp_risk = traj.final_emp_risk;
  res.pop_risk = population_risk_exact(traj.final_model, cfg.loss, cfg.dist);

  double eps = solve_epsilon_upper(cfg.phi, EpsilonCondition::upper(cfg.gamma, cfg.eta, cfg.steps));
  res.eps_ref = eps;
  Vector wstar_eps = reference_point(cfg.phi, cfg.dist, eps);
  double wnorm = norm(wstar_eps);

  res.bound_norm = norm_bound(wnorm, cfg.eta, eps, cfg.steps);
  detail::push_flag(res.violations, "norm", res.norm_w, res.bound_norm, kLemmaSlack);

  if (cfg.algo == Algo::gd) {
    res.violations.push_back(
        {"descent", traj.max_ascent > kDescentSlack, kDescentSlack - traj.max_ascent});
    res.bound_opt_error = opt_error_bound(wnorm, cfg.eta, eps, cfg.steps);
    detail::push_flag(res.violations, "opt_error", res.emp_risk, res.bound_opt_error, kLemmaSlack);
  } else {
    double regret = traj.realized_loss_mean -
                    traj.comparator_loss_mean(cfg.loss, data, wstar_eps);
    double regret_cap = wnorm * wnorm / (2.0 * cfg.eta * static_cast<double>(cfg.steps));
    detail::push_flag(res.violations, "regret", regret, regret_cap, kLemmaSlack);
    res.bound_sgd = sgd_empirical_bound(wnorm, cfg.eta, eps, cfg.steps, cfg.loss.beta(),
                                        cfg.delta);
    detail::push_flag(res.violations, "sgd_empirical", res.emp_risk, res.bound_sgd, 0.0);
    res.bound_opt_error = opt_error_bound(wnorm, cfg.eta, eps, cfg.steps);
  }

  BoundReport upper = upper_risk_bound(cfg.phi, cfg.gamma, cfg.eta, cfg.steps, cfg.n, cfg.delta,
                                       cfg.K, cfg.loss.beta());
  res.bound_upper = upper.value;
  detail::push_flag(res.violations, "upper_risk", res.pop_risk, res.bound_upper, 0.0);

  try {
    BoundReport lower = lower_risk_bound(cfg.phi, cfg.gamma, cfg.eta, cfg.steps, cfg.n,
                                         cfg.loss.beta());
    res.lower_big = lower.term("big_T");
    res.lower_small = lower.term("small_T");
  } catch (const std::exception&) {
    // condition infeasible at this (T, n); lower bound left unset
  }
  return res;
}

inline TrialResult run_trial(const TrialConfig& cfg, std::uint64_t seed) {
  Dataset data = sample_dataset(cfg.dist, cfg.n, seed);
  return run_trial_on(cfg, data, seed);
}

enum class LowerBoundKind { none, big_t, small_t, combined };

inline const char* to_string(LowerBoundKind k) {
  switch (k) {
    case LowerBoundKind::none: return "none";
    case LowerBoundKind::big_t: return "big_t";
    case LowerBoundKind::small_t: return "small_t";
    default: return "combined";
  }
}

/// Sweep over one axis. `make_cell` builds the trial configuration for an
/// axis value (the hard-instance distributions depend on T, so cells own
/// their distributions).
struct SweepConfig {
  std::string axis = "T";  // "T" | "n" | "gamma"
  std::vector<double> values;
  int trials_per_cell = 2000;
  std::uint64_t global_seed = 1;
  std::function<TrialConfig(double)> make_cell;
  LowerBoundKind lower_kind = LowerBoundKind::none;
  double lower_eps = 1.0 / 256.0;
};

struct CellStats {
  double axis_value = 0.0;
  long long steps = 0;
  long long n = 0;
  double gamma = 0.0;
  int trials = 0;
  double mean_pop = 0.0;
  double stderr_pop = 0.0;
  double mean_emp = 0.0;
  double mean_norm = 0.0;
  double bound_upper = 0.0;
  double bound_lower = std::numeric_limits<double>::quiet_NaN();
  long long deterministic_violations = 0;
  long long sgd_bound_violations = 0;
  std::vector<double> pop_risks;  // one entry per trial, in trial order
};

struct SweepResult {
  std::string axis;
  std::vector<double> values;
  int trials_per_cell = 0;
  std::uint64_t global_seed = 0;
  LowerBoundKind lower_kind = LowerBoundKind::none;
  double lower_eps = 0.0;
  std::vector<CellStats> cells;
  std::vector<std::vector<TrialResult>> trials;  // per cell, in trial order
  bool truncated = false;
};

/// Deterministic parallel sweep: per-trial seeds derive from
/// (global_seed, cell index, trial index), trial slots are preassigned, and
/// GD runs are shared between trials whose datasets drew identical support
/// counts (full-batch GD is a pure function of the counts). `stop` allows a
/// interrupt-triggered truncation between cells.
inline SweepResult run_sweep(const SweepConfig& cfg, const std::atomic<bool>* stop = nullptr) {
  if (cfg.values.empty()) throw std::invalid_argument("run_sweep: empty axis");
  if (!cfg.make_cell) throw std::invalid_argument("run_sweep: missing cell factory");
  if (cfg.trials_per_cell < 1) throw std::invalid_argument("run_sweep: trials_per_cell < 1");

  SweepResult out;
  out.axis = cfg.axis;
  out.values = cfg.values;
  out.trials_per_cell = cfg.trials_per_cell;
  out.global_seed = cfg.global_seed;
  out.lower_kind = cfg.lower_kind;
  out.lower_eps = cfg.lower_eps;

  for (std::size_t ci = 0; ci < cfg.values.size(); ++ci) {
    if (stop && stop->load()) {
      out.truncated = true;
      break;
    }
    TrialConfig cell_cfg = cfg.make_cell(cfg.values[ci]);
    std::size_t R = static_cast<std::size_t>(cfg.trials_per_cell);
    std::vector<TrialResult> results(R);

    if (cell_cfg.algo == Algo::gd) {
      std::vector<std::uint64_t> seeds(R);
      std::vector<Dataset> datasets;
      datasets.reserve(R);
      std::map<std::vector<long long>, std::size_t> groups;  // counts -> group id
      std::vector<std::size_t> group_of(R);
      std::vector<std::size_t> group_rep;
      for (std::size_t r = 0; r < R; ++r) {
        seeds[r] = derive_key(cfg.global_seed, ci, r);
        datasets.push_back(sample_dataset(cell_cfg.dist, cell_cfg.n, seeds[r]));
        auto [it, fresh] = groups.try_emplace(datasets.back().counts(), group_rep.size());
        if (fresh) group_rep.push_back(r);
        group_of[r] = it->second;
      }
      std::vector<TrialResult> group_result(group_rep.size());
      parallel_for(group_rep.size(), [&](std::size_t g) {
        std::size_t r = group_rep[g];
        group_result[g] = run_trial_on(cell_cfg, datasets[r], seeds[r]);
      });
      for (std::size_t r = 0; r < R; ++r) {
        results[r] = group_result[group_of[r]];
        results[r].seed = seeds[r];
      }
    } else {
      parallel_for(R, [&](std::size_t r) {
        std::uint64_t seed = derive_key(cfg.global_seed, ci, r);
        results[r] = run_trial(cell_cfg, seed);
      });
    }

    CellStats stats;
    stats.axis_value = cfg.values[ci];
    stats.steps = cell_cfg.steps;
    stats.n = cell_cfg.n;
    stats.gamma = cell_cfg.gamma;
    stats.trials = cfg.trials_per_cell;
    stats.pop_risks.reserve(R);
    KahanSum pop, emp, nw;
    for (const auto& tr : results) {
      pop.add(tr.pop_risk);
      emp.add(tr.emp_risk);
      nw.add(tr.norm_w);
      stats.pop_risks.push_back(tr.pop_risk);
      if (tr.any_deterministic_violation()) stats.deterministic_violations++;
      if (const auto* f = tr.flag("sgd_empirical"); f && f->violated)
        stats.sgd_bound_violations++;
    }
    double Rd = static_cast<double>(R);
    stats.mean_pop = pop.value() / Rd;
    stats.mean_emp = emp.value() / Rd;
    stats.mean_norm = nw.value() / Rd;
    stats.stderr_pop = standard_error(stats.pop_risks);
    stats.bound_upper = upper_risk_bound(cell_cfg.phi, cell_cfg.gamma, cell_cfg.eta,
                                         cell_cfg.steps, cell_cfg.n, cell_cfg.delta, cell_cfg.K,
                                         cell_cfg.loss.beta())
                            .value;
    switch (cfg.lower_kind) {
      case LowerBoundKind::big_t:
        stats.bound_lower = lower_bigT_value(cell_cfg.phi, cell_cfg.gamma, cell_cfg.n,
                                             cell_cfg.loss.beta(), cfg.lower_eps);
        break;
      case LowerBoundKind::small_t:
        stats.bound_lower = lower_smallT_value(cell_cfg.phi, cell_cfg.gamma, cell_cfg.eta,
                                               cell_cfg.steps, cfg.lower_eps);
        break;
      case LowerBoundKind::combined:
        stats.bound_lower = lower_risk_bound(cell_cfg.phi, cell_cfg.gamma, cell_cfg.eta,
                                             cell_cfg.steps, cell_cfg.n, cell_cfg.loss.beta())
                                .value;
        break;
      case LowerBoundKind::none:
        break;
    }
    out.cells.push_back(std::move(stats));
    out.trials.push_back(std::move(results));
  }
  return out;
}

struct SlopeFit {
  double slope = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

/// Least-squares slope of log(mean risk) against log(axis), with a
/// percentile bootstrap interval over per-cell trial resamples.
inline SlopeFit fit_slope(const SweepResult& sweep) {
  if (sweep.cells.size() < 3)
    throw std::invalid_argument("fit_slope: need at least 3 cells along the axis");
  std::vector<double> x;
  std::vector<std::vector<double>> samples;
  for (const auto& c : sweep.cells) {
    if (!(c.axis_value > 0.0)) throw std::invalid_argument("fit_slope: axis values must be > 0");
    x.push_back(std::log(c.axis_value));
    samples.push_back(c.pop_risks);
  }
  BootstrapSlope b =
      bootstrap_slope(samples, x, derive_key(sweep.global_seed, 0x736c6f7065ULL));
  return {b.slope, b.lower, b.upper};
}

/// Monte Carlo certificate for the sampling events behind the large-T hard
/// instance on n examples plus one validation draw:
///   A1: the rare third point is the validation example and missed the sample;
///   A2: the adversarial second point holds between 1/32 and 1/8 of the sample.
struct ProbReport {
  long long n = 0;
  long long samples = 0;
  WilsonInterval p_a1;
  WilsonInterval p_a2_given_a1;
  WilsonInterval p_joint;
  double floor_a1 = 0.0;       // 1 / (2 e n)
  double floor_a2 = 1.0 / 60;  // conditional floor
  double floor_joint = 0.0;    // 1 / (120 e n)
  double analytic_a1 = 0.0;    // (1/n)(1 - 1/n)^n
  double analytic_gap_se = 0.0;
  bool pass_a1 = false;
  bool pass_a2 = false;
  bool pass_joint = false;
  bool pass_analytic = false;

  bool all_pass() const { return pass_a1 && pass_a2 && pass_joint && pass_analytic; }
};

inline ProbReport estimate_event_probs(double gamma, long long n, long long samples,
                                       std::uint64_t seed) {
  DiscreteDistribution dist = make_bigT_instance(gamma, n);  // validates gamma, n
  if (samples < 1000) throw std::invalid_argument("estimate_event_probs: too few samples");

  struct Tally {
    long long a1 = 0, joint = 0;
  };
  const std::size_t blocks = 256;
  std::vector<Tally> tally(blocks);
  long long per_block = (samples + static_cast<long long>(blocks) - 1) / blocks;
  parallel_for(blocks, [&](std::size_t b) {
    long long lo = static_cast<long long>(b) * per_block;
    long long hi = std::min(samples, lo + per_block);
    Tally t;
    for (long long s = lo; s < hi; ++s) {
      SplitMix64 rng(derive_key(seed, 0x70726f62ULL, static_cast<std::uint64_t>(s)));
      long long c2 = 0;
      bool has3 = false;
      for (long long i = 0; i < n; ++i) {
        std::size_t j = dist.sample_index(rng.next_double());
        if (j == 1) c2++;
        if (j == 2) has3 = true;
      }
      bool a1 = !has3 && dist.sample_index(rng.next_double()) == 2;
      if (!a1) continue;
      t.a1++;
      if (32 * c2 >= n && 8 * c2 <= n) t.joint++;
    }
    tally[b] = t;
  });
  long long a1 = 0, joint = 0;
  for (const auto& t : tally) {
    a1 += t.a1;
    joint += t.joint;
  }

  ProbReport rep;
  rep.n = n;
  rep.samples = samples;
  rep.floor_a1 = 1.0 / (2.0 * std::numbers::e * static_cast<double>(n));
  rep.floor_joint = 1.0 / (120.0 * std::numbers::e * static_cast<double>(n));
  double inv_n = 1.0 / static_cast<double>(n);
  rep.analytic_a1 = inv_n * std::pow(1.0 - inv_n, static_cast<double>(n));
  rep.p_a1 = wilson_interval(a1, samples, kZ95OneSided);
  rep.p_joint = wilson_interval(joint, samples, kZ95OneSided);
  if (a1 > 0) rep.p_a2_given_a1 = wilson_interval(joint, a1, kZ95OneSided);
  rep.pass_a1 = rep.p_a1.lower >= rep.floor_a1;
  rep.pass_a2 = a1 > 0 && rep.p_a2_given_a1.lower >= rep.floor_a2;
  rep.pass_joint = rep.p_joint.lower >= rep.floor_joint;
  double se = std::sqrt(rep.p_a1.estimate * (1.0 - rep.p_a1.estimate) /
                        static_cast<double>(samples));
  rep.analytic_gap_se = se > 0.0 ? std::abs(rep.p_a1.estimate - rep.analytic_a1) / se
                                 : std::numeric_limits<double>::infinity();
  rep.pass_analytic = rep.analytic_gap_se <= 3.0;
  return rep;
}

/// Per-cell verdicts for a finished sweep: deterministic lemmas must never
/// trip; the mean exact risk must sit below the upper bound and (for hard
/// instances) above the configured lower bound, both with one-sided 95%
/// confidence margins.
struct CellVerdict {
  double axis_value = 0.0;
  bool deterministic_ok = true;
  bool upper_ok = true;
  bool lower_ok = true;
  double upper_slack = 0.0;  // bound - (mean + z se)
  double lower_slack = 0.0;  // (mean - z se) - bound
  bool pass() const { return deterministic_ok && upper_ok && lower_ok; }
};

struct VerificationReport {
  std::vector<CellVerdict> cells;
  bool all_pass() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellVerdict& c) { return c.pass(); });
  }
};

inline VerificationReport verify_bounds(const SweepResult& sweep) {
  VerificationReport rep;
  for (const auto& c : sweep.cells) {
    CellVerdict v;
    v.axis_value = c.axis_value;
    v.deterministic_ok = c.deterministic_violations == 0;
    v.upper_slack = c.bound_upper - (c.mean_pop + kZ95OneSided * c.stderr_pop);
    v.upper_ok = v.upper_slack >= 0.0;
    if (!std::isnan(c.bound_lower)) {
      v.lower_slack = (c.mean_pop - kZ95OneSided * c.stderr_pop) - c.bound_lower;
      v.lower_ok = v.lower_slack >= 0.0;
    }
    rep.cells.push_back(v);
  }
  return rep;
}

}  // namespace sepgd
