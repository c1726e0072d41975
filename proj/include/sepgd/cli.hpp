#pragma once

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sepgd/config.hpp"
#include "sepgd/report_io.hpp"

namespace sepgd {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

inline std::atomic<bool> g_stop{false};

inline void handle_interrupt(int) { g_stop.store(true); }

inline json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

inline std::filesystem::path ensure_output_dir(const RunSettings& s) {
  std::filesystem::path dir(s.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void print_certificate(const std::string& title, const CertificateReport& rep) {
  std::cout << title << ": " << (rep.all_pass() ? "pass" : "FAIL")
            << " (worst violation " << format_double(rep.worst()) << ")\n";
  for (const auto& item : rep.items)
    if (!item.pass)
      std::cout << "  failed: " << item.name << " violation "
                << format_double(item.worst_violation) << " at u=" << format_double(item.location)
                << "\n";
}

inline int cmd_validate(const json& raw) {
  RunSettings s = parse_settings(raw);
  auto dir = ensure_output_dir(s);
  TailFunction phi = make_tail(s.tail_spec);
  AxiomReport axioms = check_tail_axioms(phi);
  write_text_file((dir / "axiom_report.json").string(), to_json(axioms).dump(2) + "\n");
  print_certificate("tail axioms", axioms);
  if (!axioms.all_pass()) return kExitCheckFailed;

  LossFunction loss = make_loss(s.loss_kind, phi);
  MembershipReport membership = check_loss_class(loss, phi);
  write_text_file((dir / "membership_report.json").string(), to_json(membership).dump(2) + "\n");
  print_certificate("loss class membership", membership);
  return membership.all_pass() ? kExitOk : kExitCheckFailed;
}

inline int cmd_run(const json& raw) {
  RunSettings s = parse_settings(raw);
  auto dir = ensure_output_dir(s);
  TrialConfig cfg = make_trial_config(s);
  TrialResult res = run_trial(cfg, s.seed);
  write_text_file((dir / "trial.json").string(), to_json(res).dump(2) + "\n");
  write_text_file((dir / "trial.csv").string(), trial_csv_header() + trial_csv_row(res));

  std::cout << "trial: " << res.dist_label << " + " << res.loss_kind << " [" << res.algo
            << "], T=" << res.steps << " n=" << res.n << " gamma=" << format_double(res.gamma)
            << " eta=" << format_double(res.eta) << " seed=" << res.seed << "\n";
  std::cout << "  measured   ||w||=" << format_double(res.norm_w)
            << "  emp_risk=" << format_double(res.emp_risk)
            << "  pop_risk=" << format_double(res.pop_risk) << "\n";
  std::cout << "  bounds     norm<=" << format_double(res.bound_norm)
            << "  opt_error<=" << format_double(res.bound_opt_error)
            << "  risk<=" << format_double(res.bound_upper) << "\n";
  bool ok = true;
  for (const auto& v : res.violations) {
    std::cout << "  check " << v.name << ": " << (v.violated ? "VIOLATED" : "ok")
              << " (slack " << format_double(v.slack) << ")\n";
    if (v.violated) ok = false;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

inline void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& sweep) {
  write_text_file((dir / "trials.csv").string(), trials_csv(sweep));
  write_text_file((dir / "summary.json").string(), summary_json(sweep).dump(2) + "\n");
  write_text_file((dir / ("plotdata_" + sweep.axis + ".csv")).string(), plotdata_csv(sweep));
}

inline int cmd_sweep(const json& raw) {
  RunSettings s = parse_settings(raw);
  auto dir = ensure_output_dir(s);
  SweepConfig sc = make_sweep_config(s);
  g_stop.store(false);
  std::signal(SIGINT, handle_interrupt);
  SweepResult sweep = run_sweep(sc, &g_stop);
  std::signal(SIGINT, SIG_DFL);
  write_sweep_outputs(dir, sweep);
  for (const auto& c : sweep.cells)
    std::cout << "cell " << sweep.axis << "=" << format_double(c.axis_value)
              << "  mean_risk=" << format_double(c.mean_pop) << " (se "
              << format_double(c.stderr_pop) << ")  upper=" << format_double(c.bound_upper)
              << "  lower=" << format_double(c.bound_lower)
              << "  det_violations=" << c.deterministic_violations << "\n";
  if (sweep.truncated) {
    std::cout << "sweep truncated by interrupt; partial results flushed\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

inline int cmd_rates(const json& raw) {
  RunSettings s = parse_settings(raw);
  auto dir = ensure_output_dir(s);
  TailFunction phi = make_tail(s.tail_spec);
  RateEntry e = rate_table(phi.family(), phi.alpha(), s.gamma, s.steps, s.n);
  write_text_file((dir / "rates.json").string(), to_json(e).dump(2) + "\n");
  std::cout << "family " << to_string(e.family);
  if (e.alpha > 0.0) std::cout << " (alpha=" << format_double(e.alpha) << ")";
  std::cout << "\n  T-term: " << e.t_term << " = " << format_double(e.t_value)
            << "\n  n-term: " << e.n_term << " = " << format_double(e.n_value)
            << "\n  predicted slope in T: " << format_double(e.slope_T_power)
            << " (local " << format_double(e.slope_T_local) << ")"
            << "\n  predicted slope in n: " << format_double(e.slope_n) << "\n";
  return kExitOk;
}

inline int cmd_verify(const json& raw) {
  RunSettings s = parse_settings(raw);
  auto dir = ensure_output_dir(s);
  SweepConfig sc = make_sweep_config(s);
  g_stop.store(false);
  std::signal(SIGINT, handle_interrupt);
  SweepResult sweep = run_sweep(sc, &g_stop);
  std::signal(SIGINT, SIG_DFL);
  write_sweep_outputs(dir, sweep);
  VerificationReport rep = verify_bounds(sweep);
  write_text_file((dir / "verification.json").string(), to_json(rep).dump(2) + "\n");
  for (const auto& c : rep.cells)
    std::cout << "cell " << sweep.axis << "=" << format_double(c.axis_value) << "  "
              << (c.pass() ? "pass" : "FAIL") << " (deterministic "
              << (c.deterministic_ok ? "ok" : "violated") << ", upper slack "
              << format_double(c.upper_slack) << ", lower slack "
              << format_double(c.lower_slack) << ")\n";
  if (sweep.cells.size() >= 3) {
    SlopeFit fit = fit_slope(sweep);
    std::cout << "slope over " << sweep.axis << ": " << format_double(fit.slope) << " ["
              << format_double(fit.ci_lower) << ", " << format_double(fit.ci_upper) << "]\n";
  }
  if (sweep.truncated || !rep.all_pass()) return kExitCheckFailed;
  return kExitOk;
}

}  // namespace cli_detail

/// Entry point shared by the binary and the tests. Returns the process exit
/// code: 0 success, 1 certificate or verification failure, 2 usage/config
/// error.
inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"risk-bound experiments for gradient descent on separable data"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const char* names[] = {"validate", "run", "sweep", "rates", "verify"};
  const char* blurbs[] = {
      "check tail axioms and loss class membership, write certificate reports",
      "run a single trial, write trial.json and trial.csv",
      "run a trial grid, write trials.csv, summary.json and plot data",
      "print the closed-form rate and predicted slopes for the configured tail",
      "run a sweep and check measured risk against the configured bounds"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("config", config_path, "JSON config file")->required();
    sub->add_option("--set", overrides,
                    "override a config field via a dotted path, e.g. --set sweep.values=[35,70]");
  }

  std::vector<const char*> argv;
  argv.push_back("sepgd");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    json raw = cli_detail::load_config_json(config_path, overrides);
    if (app.got_subcommand("validate")) return cli_detail::cmd_validate(raw);
    if (app.got_subcommand("run")) return cli_detail::cmd_run(raw);
    if (app.got_subcommand("sweep")) return cli_detail::cmd_sweep(raw);
    if (app.got_subcommand("rates")) return cli_detail::cmd_rates(raw);
    if (app.got_subcommand("verify")) return cli_detail::cmd_verify(raw);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace sepgd
