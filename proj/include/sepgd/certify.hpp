#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace sepgd {

/// One numerically certified property: worst violation magnitude seen on the
/// grid, where it happened, and whether it stays under the pass tolerance.
struct CheckItem {
  std::string name;
  bool pass = true;
  double worst_violation = 0.0;
  double location = 0.0;

  void record(double violation, double where) {
    if (violation > worst_violation) {
      worst_violation = violation;
      location = where;
    }
  }
  void finalize(double tol) { pass = worst_violation <= tol; }
};

struct CertificateReport {
  std::vector<CheckItem> items;
  double pass_tolerance = 1e-9;

  bool all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.pass; });
  }
  double worst() const {
    double w = 0.0;
    for (const auto& c : items) w = std::max(w, c.worst_violation);
    return w;
  }
  const CheckItem* find(const std::string& name) const {
    for (const auto& c : items)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& c : items)
      if (!c.pass) out.push_back(c.name);
    return out;
  }
};

using AxiomReport = CertificateReport;
using MembershipReport = CertificateReport;

}  // namespace sepgd
