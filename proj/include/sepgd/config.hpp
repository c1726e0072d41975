#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepgd/data.hpp"
#include "sepgd/experiments.hpp"
#include "sepgd/loss.hpp"
#include "sepgd/tail.hpp"

namespace sepgd {

using json = nlohmann::json;

/// Malformed or inconsistent configuration; the message carries the field
/// path that failed.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cfg_detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("missing field: " + (path.empty() ? key : path + "." + key));
  return j.at(key);
}

inline double number_at(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number())
    throw ConfigError("field must be a number: " + (path.empty() ? key : path + "." + key));
  return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError("field must be a number: " + key);
  return j.at(key).get<double>();
}

inline std::string string_at(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string())
    throw ConfigError("field must be a string: " + (path.empty() ? key : path + "." + key));
  return v.get<std::string>();
}

}  // namespace cfg_detail

/// Tail spec: {"family": "exponential"|"polynomial"|"stretched_exponential",
/// "alpha": number, "beta": number}. alpha is required for the parametric
/// families. beta, when given, replaces the derived smoothness constant; the
/// axiom certificate is the judge of whether it actually upper-bounds the
/// curvature (a looser constant passes, an understated one fails `validate`).
inline TailFunction make_tail(const json& spec) {
  std::string family = cfg_detail::string_at(spec, "family", "tail");
  TailFunction phi = [&]() {
    try {
      if (family == "exponential") return TailFunction::exponential();
      if (family == "polynomial")
        return TailFunction::polynomial(cfg_detail::number_at(spec, "alpha", "tail"));
      if (family == "stretched_exponential")
        return TailFunction::stretched_exponential(cfg_detail::number_at(spec, "alpha", "tail"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("tail: ") + e.what());
    }
    throw ConfigError("tail.family must be exponential | polynomial | stretched_exponential");
  }();
  if (spec.contains("beta")) {
    double beta = cfg_detail::number_at(spec, "beta", "tail");
    if (!(beta > 0.0)) throw ConfigError("tail.beta must be positive");
    return TailFunction(phi.family(), phi.alpha(), beta,
                        [phi](double u) { return phi.value(u); },
                        [phi](double u) { return phi.slope(u); });
  }
  return phi;
}

inline LossFunction make_loss(const std::string& kind, const TailFunction& phi) {
  if (kind == "quadratic_extension") return make_quadratic_extension(phi);
  if (kind == "linear_extension") return make_linear_extension(phi);
  if (kind == "logistic") return make_logistic();
  if (kind == "squared_hinge") return make_squared_hinge();
  throw ConfigError(
      "loss must be quadratic_extension | linear_extension | logistic | squared_hinge");
}

/// Custom distribution: {"support": [[...], ...], "probs": [...],
/// "w_star": [...], "gamma": number}. Constructor invariants (norms, total
/// probability, margin certificate) are enforced.
inline DiscreteDistribution make_custom_distribution(const json& spec) {
  const json& support_j = cfg_detail::require(spec, "support", "distribution");
  const json& probs_j = cfg_detail::require(spec, "probs", "distribution");
  const json& w_j = cfg_detail::require(spec, "w_star", "distribution");
  double gamma = cfg_detail::number_at(spec, "gamma", "distribution");
  if (!support_j.is_array() || !probs_j.is_array() || !w_j.is_array())
    throw ConfigError("distribution.support/probs/w_star must be arrays");
  std::vector<Vector> support;
  for (const auto& row : support_j) {
    if (!row.is_array()) throw ConfigError("distribution.support rows must be arrays");
    support.push_back(row.get<Vector>());
  }
  try {
    return DiscreteDistribution(std::move(support), probs_j.get<std::vector<double>>(),
                                w_j.get<Vector>(), gamma);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("distribution: ") + e.what());
  }
}

/// Run settings: the validated, resolved form of a config file.
struct RunSettings {
  json tail_spec;
  std::string loss_kind = "quadratic_extension";
  json dist_spec;  // {"kind": "big_t"} | {"kind": "small_t", "eps": x} | custom
  double gamma = 1.0 / 16.0;
  std::optional<double> eta;  // nullopt = auto (1 / (2 beta))
  long long steps = 1000;
  long long n = 100;
  double delta = 0.1;
  double K = kDefaultK;
  Algo algo = Algo::gd;
  int trials = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  // sweep section
  std::string sweep_axis;
  std::vector<double> sweep_values;
  LowerBoundKind lower_kind = LowerBoundKind::none;
  double lower_eps = 1.0 / 256.0;
};

inline RunSettings parse_settings(const json& j) {
  RunSettings s;
  s.tail_spec = cfg_detail::require(j, "tail", "");
  s.loss_kind = cfg_detail::string_at(j, "loss", "");
  s.dist_spec = cfg_detail::require(j, "distribution", "");
  s.gamma = cfg_detail::number_at(j, "gamma", "");
  const json& eta_j = cfg_detail::require(j, "eta", "");
  if (eta_j.is_string()) {
    if (eta_j.get<std::string>() != "auto")
      throw ConfigError("eta must be a positive number or \"auto\"");
  } else if (eta_j.is_number()) {
    s.eta = eta_j.get<double>();
    if (!(*s.eta > 0.0)) throw ConfigError("eta must be positive");
  } else {
    throw ConfigError("eta must be a positive number or \"auto\"");
  }
  s.steps = static_cast<long long>(cfg_detail::number_at(j, "T", ""));
  s.n = static_cast<long long>(cfg_detail::number_at(j, "n", ""));
  s.delta = cfg_detail::number_or(j, "delta", 0.1);
  s.K = cfg_detail::number_or(j, "K", kDefaultK);
  std::string algo = j.contains("algo") ? cfg_detail::string_at(j, "algo", "") : "gd";
  if (algo == "gd") s.algo = Algo::gd;
  else if (algo == "sgd") s.algo = Algo::sgd;
  else throw ConfigError("algo must be gd | sgd");
  s.trials = static_cast<int>(cfg_detail::number_or(j, "trials", 1));
  if (s.trials < 1) throw ConfigError("trials must be >= 1");
  s.seed = static_cast<std::uint64_t>(cfg_detail::number_or(j, "seed", 1));
  if (j.contains("output_dir")) s.output_dir = cfg_detail::string_at(j, "output_dir", "");

  if (j.contains("sweep")) {
    const json& sw = j.at("sweep");
    s.sweep_axis = cfg_detail::string_at(sw, "axis", "sweep");
    if (s.sweep_axis != "T" && s.sweep_axis != "n" && s.sweep_axis != "gamma")
      throw ConfigError("sweep.axis must be T | n | gamma");
    const json& vals = cfg_detail::require(sw, "values", "sweep");
    if (!vals.is_array() || vals.empty())
      throw ConfigError("sweep.values must be a nonempty array");
    for (const auto& v : vals) {
      if (!v.is_number()) throw ConfigError("sweep.values entries must be numbers");
      s.sweep_values.push_back(v.get<double>());
    }
    std::string lk = sw.contains("lower_bound") ? cfg_detail::string_at(sw, "lower_bound", "sweep")
                                                : "none";
    if (lk == "none") s.lower_kind = LowerBoundKind::none;
    else if (lk == "big_t") s.lower_kind = LowerBoundKind::big_t;
    else if (lk == "small_t") s.lower_kind = LowerBoundKind::small_t;
    else if (lk == "combined") s.lower_kind = LowerBoundKind::combined;
    else throw ConfigError("sweep.lower_bound must be none | big_t | small_t | combined");
    s.lower_eps = cfg_detail::number_or(sw, "lower_eps", 1.0 / 256.0);
  }
  return s;
}

inline RunSettings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_settings(j);
}

/// Resolve the trial configuration for given cell parameters. small_t
/// distributions are rebuilt per cell because their mixture weight depends
/// on (gamma, eps, eta, T).
inline TrialConfig make_trial_config(const RunSettings& s, long long steps, long long n,
                                     double gamma) {
  TailFunction phi = make_tail(s.tail_spec);
  LossFunction loss = make_loss(s.loss_kind, phi);
  double eta = s.eta.value_or(0.5 / loss.beta());
  std::string kind = cfg_detail::string_at(s.dist_spec, "kind", "distribution");
  std::optional<DiscreteDistribution> dist;
  std::string label;
  if (kind == "big_t") {
    dist = make_bigT_instance(gamma, n);
    label = "big_t";
  } else if (kind == "small_t") {
    double eps = cfg_detail::number_at(s.dist_spec, "eps", "distribution");
    dist = make_smallT_instance(phi, gamma, eps, eta, steps);
    label = "small_t";
  } else if (kind == "custom") {
    dist = make_custom_distribution(s.dist_spec);
    label = "custom";
  } else {
    throw ConfigError("distribution.kind must be big_t | small_t | custom");
  }
  TrialConfig cfg{std::move(*dist), std::move(loss), std::move(phi), std::move(label),
                  gamma,            eta,             steps,          n,
                  s.algo,           s.delta,         s.K};
  return cfg;
}

inline TrialConfig make_trial_config(const RunSettings& s) {
  return make_trial_config(s, s.steps, s.n, s.gamma);
}

inline SweepConfig make_sweep_config(const RunSettings& s) {
  if (s.sweep_axis.empty()) throw ConfigError("config has no sweep section");
  SweepConfig sc;
  sc.axis = s.sweep_axis;
  sc.values = s.sweep_values;
  sc.trials_per_cell = s.trials;
  sc.global_seed = s.seed;
  sc.lower_kind = s.lower_kind;
  sc.lower_eps = s.lower_eps;
  RunSettings base = s;
  std::string axis = s.sweep_axis;
  sc.make_cell = [base, axis](double v) {
    long long steps = base.steps;
    long long n = base.n;
    double gamma = base.gamma;
    if (axis == "T") steps = static_cast<long long>(v);
    else if (axis == "n") n = static_cast<long long>(v);
    else gamma = v;
    return make_trial_config(base, steps, n, gamma);
  };
  return sc;
}

/// Apply one "--set path.to.field=value" override onto raw JSON. The value
/// is parsed as JSON when possible and falls back to a plain string.
inline void apply_override(json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.to.field=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override has empty path segment: " + assignment);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace sepgd
