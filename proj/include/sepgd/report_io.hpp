#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepgd/bounds.hpp"
#include "sepgd/certify.hpp"
#include "sepgd/experiments.hpp"

namespace sepgd {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trippable decimal form; output bytes are stable across
/// runs, which the reproducibility contract depends on.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

// ---- JSON forms -----------------------------------------------------------

inline json to_json(const CheckItem& c) {
  return json{{"name", c.name},
              {"pass", c.pass},
              {"worst_violation", c.worst_violation},
              {"location", c.location}};
}

inline json to_json(const CertificateReport& r) {
  json items = json::array();
  for (const auto& c : r.items) items.push_back(to_json(c));
  return json{{"schema_version", kSchemaVersion},
              {"pass", r.all_pass()},
              {"pass_tolerance", r.pass_tolerance},
              {"worst_violation", r.worst()},
              {"items", items}};
}

inline json to_json(const BoundReport& r) {
  json terms = json::object();
  for (const auto& [k, v] : r.terms) terms[k] = v;
  return json{{"schema_version", kSchemaVersion},
              {"kind", to_string(r.kind)},
              {"inputs", r.inputs},
              {"terms", terms},
              {"value", r.value}};
}

inline json to_json(const RateEntry& e) {
  return json{{"schema_version", kSchemaVersion},
              {"family", to_string(e.family)},
              {"alpha", e.alpha},
              {"t_term", e.t_term},
              {"n_term", e.n_term},
              {"t_value", e.t_value},
              {"n_value", e.n_value},
              {"total", e.total()},
              {"slope_T_power", e.slope_T_power},
              {"slope_T_local", e.slope_T_local},
              {"slope_n", e.slope_n}};
}

inline json to_json(const ViolationFlag& v) {
  return json{{"name", v.name}, {"violated", v.violated}, {"slack", v.slack}};
}

inline json to_json(const TrialResult& t) {
  json flags = json::array();
  for (const auto& v : t.violations) flags.push_back(to_json(v));
  return json{{"schema_version", kSchemaVersion},
              {"tail_family", t.tail_family},
              {"tail_alpha", t.tail_alpha},
              {"loss", t.loss_kind},
              {"distribution", t.dist_label},
              {"gamma", t.gamma},
              {"eta", t.eta},
              {"T", t.steps},
              {"n", t.n},
              {"algo", t.algo},
              {"seed", t.seed},
              {"delta", t.delta},
              {"K", t.K},
              {"eps_ref", t.eps_ref},
              {"norm_w", t.norm_w},
              {"emp_risk", t.emp_risk},
              {"pop_risk", t.pop_risk},
              {"bound_norm", t.bound_norm},
              {"bound_opt_error", t.bound_opt_error},
              {"bound_upper", t.bound_upper},
              {"bound_sgd", t.bound_sgd},
              {"lower_big", t.lower_big},
              {"lower_small", t.lower_small},
              {"violations", flags}};
}

inline json to_json(const ProbReport& p) {
  auto iv = [](const WilsonInterval& w) {
    return json{{"estimate", w.estimate}, {"lower", w.lower}, {"upper", w.upper}};
  };
  return json{{"schema_version", kSchemaVersion},
              {"n", p.n},
              {"samples", p.samples},
              {"p_a1", iv(p.p_a1)},
              {"p_a2_given_a1", iv(p.p_a2_given_a1)},
              {"p_joint", iv(p.p_joint)},
              {"floor_a1", p.floor_a1},
              {"floor_a2", p.floor_a2},
              {"floor_joint", p.floor_joint},
              {"analytic_a1", p.analytic_a1},
              {"analytic_gap_se", p.analytic_gap_se},
              {"pass", p.all_pass()}};
}

inline json to_json(const VerificationReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back(json{{"axis_value", c.axis_value},
                         {"deterministic_ok", c.deterministic_ok},
                         {"upper_ok", c.upper_ok},
                         {"lower_ok", c.lower_ok},
                         {"upper_slack", c.upper_slack},
                         {"lower_slack", c.lower_slack}});
  return json{{"schema_version", kSchemaVersion}, {"pass", r.all_pass()}, {"cells", cells}};
}

inline json summary_json(const SweepResult& s) {
  json cells = json::array();
  for (const auto& c : s.cells)
    cells.push_back(json{{"axis_value", c.axis_value},
                         {"T", c.steps},
                         {"n", c.n},
                         {"gamma", c.gamma},
                         {"trials", c.trials},
                         {"mean_pop_risk", c.mean_pop},
                         {"stderr_pop_risk", c.stderr_pop},
                         {"mean_emp_risk", c.mean_emp},
                         {"mean_norm", c.mean_norm},
                         {"upper_bound", c.bound_upper},
                         {"lower_bound", c.bound_lower},
                         {"deterministic_violations", c.deterministic_violations},
                         {"sgd_bound_violations", c.sgd_bound_violations}});
  return json{{"schema_version", kSchemaVersion},
              {"axis", s.axis},
              {"values", s.values},
              {"trials_per_cell", s.trials_per_cell},
              {"global_seed", s.global_seed},
              {"lower_bound", to_string(s.lower_kind)},
              {"lower_eps", s.lower_eps},
              {"truncated", s.truncated},
              {"cells", cells}};
}

// ---- CSV forms ------------------------------------------------------------

inline std::string trial_csv_header() {
  return "schema_version,tail_family,tail_alpha,loss,distribution,gamma,eta,T,n,algo,seed,"
         "delta,K,eps_ref,norm_w,emp_risk,pop_risk,bound_norm,bound_opt_error,bound_upper,"
         "bound_sgd,lower_big,lower_small,violated_descent,violated_norm,violated_opt_error,"
         "violated_regret,violated_sgd_empirical,violated_upper_risk\n";
}

inline std::string trial_csv_row(const TrialResult& t) {
  auto flag = [&](const char* name) {
    const ViolationFlag* f = t.flag(name);
    return f ? (f->violated ? "1" : "0") : "";
  };
  std::string row;
  row += std::to_string(kSchemaVersion);
  row += "," + t.tail_family;
  row += "," + format_double(t.tail_alpha);
  row += "," + t.loss_kind;
  row += "," + t.dist_label;
  row += "," + format_double(t.gamma);
  row += "," + format_double(t.eta);
  row += "," + std::to_string(t.steps);
  row += "," + std::to_string(t.n);
  row += "," + t.algo;
  row += "," + std::to_string(t.seed);
  row += "," + format_double(t.delta);
  row += "," + format_double(t.K);
  row += "," + format_double(t.eps_ref);
  row += "," + format_double(t.norm_w);
  row += "," + format_double(t.emp_risk);
  row += "," + format_double(t.pop_risk);
  row += "," + format_double(t.bound_norm);
  row += "," + format_double(t.bound_opt_error);
  row += "," + format_double(t.bound_upper);
  row += "," + format_double(t.bound_sgd);
  row += "," + format_double(t.lower_big);
  row += "," + format_double(t.lower_small);
  row += std::string(",") + flag("descent");
  row += std::string(",") + flag("norm");
  row += std::string(",") + flag("opt_error");
  row += std::string(",") + flag("regret");
  row += std::string(",") + flag("sgd_empirical");
  row += std::string(",") + flag("upper_risk");
  row += "\n";
  return row;
}

inline std::string trials_csv(const SweepResult& s) {
  std::string out = trial_csv_header();
  for (const auto& cell : s.trials)
    for (const auto& t : cell) out += trial_csv_row(t);
  if (s.truncated) out += "# truncated\n";
  return out;
}

inline std::string plotdata_csv(const SweepResult& s) {
  std::string out = "x,mean_risk,stderr,upper_bound,lower_bound\n";
  for (const auto& c : s.cells) {
    out += format_double(c.axis_value);
    out += "," + format_double(c.mean_pop);
    out += "," + format_double(c.stderr_pop);
    out += "," + format_double(c.bound_upper);
    out += "," + format_double(c.bound_lower);
    out += "\n";
  }
  if (s.truncated) out += "# truncated\n";
  return out;
}

inline std::string prob_report_csv(const ProbReport& p) {
  std::string out =
      "schema_version,n,samples,event,estimate,ci_lower,floor,analytic,pass\n";
  auto row = [&](const char* name, const WilsonInterval& w, double floor, double analytic,
                 bool pass) {
    out += std::to_string(kSchemaVersion);
    out += ",";
    out += std::to_string(p.n) + "," + std::to_string(p.samples) + "," + name;
    out += "," + format_double(w.estimate);
    out += "," + format_double(w.lower);
    out += "," + format_double(floor);
    out += "," + format_double(analytic);
    out += pass ? ",1\n" : ",0\n";
  };
  row("a1", p.p_a1, p.floor_a1, p.analytic_a1, p.pass_a1);
  row("a2_given_a1", p.p_a2_given_a1, p.floor_a2,
      std::numeric_limits<double>::quiet_NaN(), p.pass_a2);
  row("joint", p.p_joint, p.floor_joint, std::numeric_limits<double>::quiet_NaN(),
      p.pass_joint);
  return out;
}

}  // namespace sepgd
