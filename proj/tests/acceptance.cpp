// Acceptance suite: end-to-end statistical and deterministic checks of the
// library, one test case per criterion, each printing a PASS/FAIL line and
// its runtime. Runs under ctest as the `acceptance` binary.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "sepgd/sepgd.hpp"

using namespace sepgd;

namespace {

constexpr std::uint64_t kSeed = 987654321;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int id, const std::string& name, bool pass, double seconds,
            const std::string& detail = "") {
  std::printf("[%s] %d. %s (%.1fs)%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(), seconds,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
}

RunSettings base_settings() {
  RunSettings s;
  s.tail_spec = json{{"family", "exponential"}};
  s.loss_kind = "quadratic_extension";
  s.dist_spec = json{{"kind", "big_t"}};
  s.gamma = 1.0 / 16.0;
  s.steps = 1000;
  s.n = 100;
  s.delta = 0.1;
  s.K = 1e5;
  s.algo = Algo::gd;
  s.trials = 100;
  s.seed = kSeed;
  return s;
}

struct CellCheck {
  bool lower_ok = true;
  bool deterministic_ok = true;
};

bool lower_bound_cells_pass(const SweepResult& sweep, std::string& detail) {
  bool ok = true;
  char buf[160];
  for (const auto& c : sweep.cells) {
    double lcb = c.mean_pop - kZ95OneSided * c.stderr_pop;
    bool cell_ok = lcb >= c.bound_lower && c.deterministic_violations == 0;
    std::snprintf(buf, sizeof(buf), "%s%g: mean %.3g (lcb %.3g) vs lower %.3g%s",
                  detail.empty() ? "" : "; ", c.axis_value, c.mean_pop, lcb, c.bound_lower,
                  cell_ok ? "" : " VIOLATED");
    detail += buf;
    ok = ok && cell_ok;
  }
  return ok;
}

}  // namespace

TEST_CASE("tail and loss certification", "[acceptance]") {
  Stopwatch timer;
  bool pass = true;
  double worst = 0.0;

  std::vector<TailFunction> tails = {
      TailFunction::exponential(),          TailFunction::polynomial(1.0),
      TailFunction::polynomial(2.0),        TailFunction::polynomial(4.0),
      TailFunction::stretched_exponential(1.5), TailFunction::stretched_exponential(2.0)};
  for (const auto& phi : tails) {
    AxiomReport rep = check_tail_axioms(phi);
    pass = pass && rep.all_pass() && rep.worst() <= 1e-9;
    worst = std::max(worst, rep.worst());
    for (const auto& loss : {make_quadratic_extension(phi), make_linear_extension(phi)}) {
      MembershipReport mem = check_loss_class(loss, phi);
      pass = pass && mem.all_pass() && mem.worst() <= 1e-9;
      worst = std::max(worst, mem.worst());
    }
  }
  MembershipReport logi = check_loss_class(make_logistic(), TailFunction::exponential());
  pass = pass && logi.all_pass() && logi.worst() <= 1e-9;
  worst = std::max(worst, logi.worst());

  double secs = timer.seconds();
  pass = pass && secs < 10.0;
  report(1, "tail/loss certification", pass, secs, "worst violation " + format_double(worst));
  REQUIRE(pass);
}

TEST_CASE("deterministic lemma suite over randomized trials", "[acceptance]") {
  Stopwatch timer;
  const int trials = 1200;
  std::vector<long long> violations(trials, 0);

  parallel_for(trials, [&](std::size_t i) {
    SplitMix64 rng(derive_key(kSeed, 0x6c656d6dULL, i));
    // tail
    TailFunction phi = [&]() {
      switch (rng.next_below(6)) {
        case 0: return TailFunction::exponential();
        case 1: return TailFunction::polynomial(1.5);
        case 2: return TailFunction::polynomial(2.0);
        case 3: return TailFunction::polynomial(3.0);
        case 4: return TailFunction::stretched_exponential(1.5);
        default: return TailFunction::stretched_exponential(2.0);
      }
    }();
    // loss (logistic only pairs with the exponential tail)
    LossFunction loss = [&]() {
      auto pick = rng.next_below(3);
      if (pick == 2 && phi.family() == TailFamily::exponential) return make_logistic();
      return pick == 0 ? make_quadratic_extension(phi) : make_linear_extension(phi);
    }();
    double eta = (0.2 + 0.8 * rng.next_double()) * 0.5 / loss.beta();
    long long T = static_cast<long long>(
        std::llround(std::exp(std::log(16.0) + rng.next_double() * std::log(10000.0 / 16.0))));
    long long n = 35 + static_cast<long long>(rng.next_below(166));
    double gamma = 0.02 + 0.105 * rng.next_double();

    DiscreteDistribution dist = [&]() {
      switch (rng.next_below(3)) {
        case 0:
          return make_bigT_instance(gamma, n);
        case 1:
          try {
            return make_smallT_instance(phi, gamma, 1.0 / 16.0, eta, T);
          } catch (const std::invalid_argument&) {
            return make_bigT_instance(gamma, n);
          }
        default:
          return DiscreteDistribution({{0.6, 0.2}, {0.1, 0.7}, {0.5, -0.1}},
                                      {0.5, 0.3, 0.2}, {1.0, 0.0}, 0.1);
      }
    }();

    Dataset data = sample_dataset(dist, n, derive_key(kSeed, 0x64617461ULL, i));
    TrainOptions opts;
    opts.record_history = false;
    Trajectory gd = run_gd(loss, data, eta, T, opts);
    Trajectory sgd = run_sgd(loss, data, eta, T, derive_key(kSeed, 0x73656564ULL, i), opts);

    long long bad = 0;
    if (gd.max_ascent > 1e-9) bad++;
    for (double eps : {0.4 * phi.value_at_zero(), 0.04, 1e-3}) {
      Vector wse = reference_point(phi, dist, eps);
      double wn = norm(wse);
      if (gd.final_norm > norm_bound(wn, eta, eps, T) + 1e-9) bad++;
      if (gd.final_emp_risk > opt_error_bound(wn, eta, eps, T) + 1e-9) bad++;
      if (sgd.final_norm > norm_bound(wn, eta, eps, T) + 1e-9) bad++;
      double regret = sgd.realized_loss_mean - sgd.comparator_loss_mean(loss, data, wse);
      if (regret > wn * wn / (2.0 * eta * static_cast<double>(T)) + 1e-9) bad++;
    }
    violations[i] = bad;
  });

  long long total = 0;
  for (long long v : violations) total += v;
  double secs = timer.seconds();
  bool pass = total == 0 && secs < 300.0;
  report(2, "deterministic lemma suite", pass, secs,
         std::to_string(trials) + " trials, " + std::to_string(total) + " violations");
  REQUIRE(pass);
}

TEST_CASE("upper bound never violated across the grid", "[acceptance]") {
  Stopwatch timer;
  long long checked = 0, violated = 0;
  for (const char* family : {"exponential", "polynomial"}) {
    for (long long T : {100LL, 1000LL, 10000LL}) {
      RunSettings s = base_settings();
      s.tail_spec = json{{"family", family}};
      if (std::string(family) == "polynomial") s.tail_spec["alpha"] = 2.0;
      s.steps = T;
      s.trials = 100;
      s.seed = derive_key(kSeed, 0x75707065ULL, static_cast<std::uint64_t>(T),
                          family[0] == 'e' ? 0ULL : 1ULL);
      s.sweep_axis = "n";
      s.sweep_values = {50.0, 500.0, 5000.0};
      SweepResult sweep = run_sweep(make_sweep_config(s));
      for (const auto& cell : sweep.trials)
        for (const auto& trial : cell) {
          checked++;
          if (const auto* f = trial.flag("upper_risk"); f && f->violated) violated++;
        }
    }
  }
  double secs = timer.seconds();
  bool pass = violated == 0 && secs < 600.0;
  report(3, "upper bound never violated", pass, secs,
         std::to_string(checked) + " trials, " + std::to_string(violated) + " violations");
  REQUIRE(pass);
}

TEST_CASE("lower bound, large-T branch", "[acceptance]") {
  Stopwatch timer;
  auto phi = TailFunction::exponential();
  double gamma = 1.0 / 16.0, eta = 0.5;
  long long t_star = minimal_feasible_steps_lower(phi, gamma, eta, 1.0 / 256.0);

  RunSettings s = base_settings();
  s.loss_kind = "quadratic_extension";
  s.steps = t_star;
  s.trials = 2000;
  s.seed = derive_key(kSeed, 0x62696774ULL);
  s.sweep_axis = "n";
  s.sweep_values = {35.0, 70.0, 140.0, 280.0};
  s.lower_kind = LowerBoundKind::big_t;
  s.lower_eps = 1.0 / 256.0;
  SweepConfig sc = make_sweep_config(s);
  SweepResult sweep = run_sweep(sc);

  std::string detail = "T=" + std::to_string(t_star);
  bool cells_ok = lower_bound_cells_pass(sweep, detail);
  // cross-check the evaluated floor against first-principles arithmetic
  double ln2 = std::log(2.0);
  // tail_inverse carries a 1e-10 relative tolerance, so allow 1e-8 here
  double expect35 = (1.0 / (120.0 * std::numbers::e * 35.0)) * (1.0 / (1152.0 * gamma * gamma)) *
                    ln2 * ln2;
  bool floor_ok = std::abs(sweep.cells[0].bound_lower - expect35) <= 1e-8 * expect35;

  SlopeFit slope = fit_slope(sweep);
  bool slope_ok = slope.slope >= -1.5 && slope.slope <= -0.5;
  detail += "; slope " + format_double(slope.slope);

  double secs = timer.seconds();
  bool pass = cells_ok && floor_ok && slope_ok && secs < 900.0;
  report(4, "lower bound, large-T branch", pass, secs, detail);
  REQUIRE(pass);
}

TEST_CASE("lower bound, small-T branch", "[acceptance]") {
  Stopwatch timer;
  RunSettings s = base_settings();
  s.loss_kind = "linear_extension";
  s.dist_spec = json{{"kind", "small_t"}, {"eps", 1.0 / 16.0}};
  s.gamma = 1.0 / 16.0;
  s.n = 10000;
  s.trials = 2000;
  s.seed = derive_key(kSeed, 0x736d6c74ULL);
  s.sweep_axis = "T";
  s.sweep_values = {100.0, 1000.0, 10000.0};
  s.lower_kind = LowerBoundKind::small_t;
  s.lower_eps = 1.0 / 16.0;
  SweepResult sweep = run_sweep(make_sweep_config(s));

  std::string detail;
  bool cells_ok = lower_bound_cells_pass(sweep, detail);
  SlopeFit slope = fit_slope(sweep);
  bool slope_ok = slope.slope >= -1.05 && slope.slope <= -0.6;
  detail += "; slope " + format_double(slope.slope);

  double secs = timer.seconds();
  bool pass = cells_ok && slope_ok && secs < 900.0;
  report(5, "lower bound, small-T branch", pass, secs, detail);
  REQUIRE(pass);
}

TEST_CASE("polynomial tail exponent", "[acceptance]") {
  Stopwatch timer;
  RunSettings s = base_settings();
  s.tail_spec = json{{"family", "polynomial"}, {"alpha", 2.0}};
  s.loss_kind = "linear_extension";
  s.dist_spec = json{{"kind", "small_t"}, {"eps", 1.0 / 16.0}};
  s.gamma = 1.0 / 8.0;
  s.n = 10000;
  s.trials = 2000;
  s.seed = derive_key(kSeed, 0x706f6c79ULL);
  s.sweep_axis = "T";
  s.sweep_values = {1000.0, 4642.0, 21544.0, 100000.0};
  s.lower_kind = LowerBoundKind::small_t;
  s.lower_eps = 1.0 / 16.0;
  SweepResult sweep = run_sweep(make_sweep_config(s));

  SlopeFit slope = fit_slope(sweep);
  double predicted = rate_table(TailFamily::polynomial, 2.0, s.gamma, 1000, 10000).slope_T_power;
  bool slope_ok = std::abs(slope.slope - predicted) <= 0.2;
  long long det = 0;
  for (const auto& c : sweep.cells) det += c.deterministic_violations;

  double secs = timer.seconds();
  bool pass = slope_ok && det == 0;
  report(6, "polynomial tail exponent", pass, secs,
         "slope " + format_double(slope.slope) + " vs predicted " + format_double(predicted) +
             " (+/- 0.2, asymptotic check with generous tolerance)");
  REQUIRE(pass);
}

TEST_CASE("sampling event probabilities", "[acceptance]") {
  Stopwatch timer;
  ProbReport rep = estimate_event_probs(1.0 / 16.0, 50, 1000000, derive_key(kSeed, 0x70726fULL));
  double secs = timer.seconds();
  bool pass = rep.all_pass() && secs < 120.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "P(A1)=%.3g (floor %.3g), P(A2|A1)=%.3g (floor %.3g), joint=%.3g (floor %.3g), "
                "analytic gap %.2f se",
                rep.p_a1.estimate, rep.floor_a1, rep.p_a2_given_a1.estimate, rep.floor_a2,
                rep.p_joint.estimate, rep.floor_joint, rep.analytic_gap_se);
  report(7, "sampling event probabilities", pass, secs, buf);
  REQUIRE(pass);
}

TEST_CASE("sgd high-probability bound", "[acceptance]") {
  Stopwatch timer;
  RunSettings s = base_settings();
  s.algo = Algo::sgd;
  s.steps = 2000;
  s.n = 100;
  s.delta = 0.1;
  s.trials = 2000;
  s.seed = derive_key(kSeed, 0x73676462ULL);
  s.sweep_axis = "n";
  s.sweep_values = {100.0};
  SweepResult sweep = run_sweep(make_sweep_config(s));

  long long violated = sweep.cells[0].sgd_bound_violations;
  double frac = static_cast<double>(violated) / static_cast<double>(s.trials);
  WilsonInterval iv = wilson_interval(static_cast<std::uint64_t>(violated),
                                      static_cast<std::uint64_t>(s.trials));
  double halfwidth = (iv.upper - iv.lower) / 2.0;
  bool pass = frac <= s.delta + halfwidth;
  double secs = timer.seconds();
  report(8, "sgd high-probability bound", pass, secs,
         "violations " + std::to_string(violated) + "/" + std::to_string(s.trials));
  REQUIRE(pass);
}

TEST_CASE("byte-identical reproducibility", "[acceptance]") {
  Stopwatch timer;
  bool pass = true;
  std::string detail;

  auto check = [&](const char* label, const std::string& a, const std::string& b) {
    if (a != b) {
      pass = false;
      detail += std::string(label) + " differs; ";
    }
  };

  {  // grid sweep (gd), including across thread counts
    RunSettings s = base_settings();
    s.steps = 1000;
    s.trials = 30;
    s.seed = derive_key(kSeed, 0x72657031ULL);
    s.sweep_axis = "n";
    s.sweep_values = {50.0, 500.0};
    SweepConfig sc = make_sweep_config(s);
    std::string first = trials_csv(run_sweep(sc));
    setenv("SEPGD_THREADS", "1", 1);
    std::string serial = trials_csv(run_sweep(sc));
    unsetenv("SEPGD_THREADS");
    check("gd sweep", first, serial);
    check("gd sweep rerun", first, trials_csv(run_sweep(sc)));
    check("gd plotdata", plotdata_csv(run_sweep(sc)), plotdata_csv(run_sweep(sc)));
  }
  {  // small-T sweep
    RunSettings s = base_settings();
    s.loss_kind = "linear_extension";
    s.dist_spec = json{{"kind", "small_t"}, {"eps", 1.0 / 16.0}};
    s.n = 10000;
    s.trials = 60;
    s.seed = derive_key(kSeed, 0x72657032ULL);
    s.sweep_axis = "T";
    s.sweep_values = {100.0, 1000.0};
    s.lower_kind = LowerBoundKind::small_t;
    s.lower_eps = 1.0 / 16.0;
    SweepConfig sc = make_sweep_config(s);
    check("small-T sweep", trials_csv(run_sweep(sc)), trials_csv(run_sweep(sc)));
  }
  {  // large-T instance at the feasibility threshold, reduced trial count
    auto phi = TailFunction::exponential();
    RunSettings s = base_settings();
    s.steps = minimal_feasible_steps_lower(phi, s.gamma, 0.5, 1.0 / 256.0);
    s.trials = 60;
    s.seed = derive_key(kSeed, 0x72657033ULL);
    s.sweep_axis = "n";
    s.sweep_values = {35.0, 70.0};
    s.lower_kind = LowerBoundKind::big_t;
    s.lower_eps = 1.0 / 256.0;
    SweepConfig sc = make_sweep_config(s);
    check("large-T sweep", trials_csv(run_sweep(sc)), trials_csv(run_sweep(sc)));
  }
  {  // sgd sweep
    RunSettings s = base_settings();
    s.algo = Algo::sgd;
    s.steps = 2000;
    s.trials = 100;
    s.seed = derive_key(kSeed, 0x72657034ULL);
    s.sweep_axis = "n";
    s.sweep_values = {100.0};
    SweepConfig sc = make_sweep_config(s);
    std::string first = trials_csv(run_sweep(sc));
    setenv("SEPGD_THREADS", "1", 1);
    std::string serial = trials_csv(run_sweep(sc));
    unsetenv("SEPGD_THREADS");
    check("sgd sweep", first, serial);
  }
  {  // probability report at full sample size
    std::uint64_t seed = derive_key(kSeed, 0x72657035ULL);
    check("prob report", prob_report_csv(estimate_event_probs(1.0 / 16.0, 50, 1000000, seed)),
          prob_report_csv(estimate_event_probs(1.0 / 16.0, 50, 1000000, seed)));
  }

  double secs = timer.seconds();
  report(9, "byte-identical reproducibility", pass, secs, detail.empty() ? "5 pipelines" : detail);
  REQUIRE(pass);
}
