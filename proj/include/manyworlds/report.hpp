#ifndef MANYWORLDS_REPORT_HPP
#define MANYWORLDS_REPORT_HPP

#include <optional>

#include "manyworlds/branching.hpp"
#include "manyworlds/observers.hpp"

namespace manyworlds {

struct Rational {
  long long num = 0;
  long long den = 1;
};

struct ReportBranch {
  std::string label;
  double weight = 0.0;
  std::optional<Rational> exact;
};

/// Serializable result of one scenario run: branch table, named scalar
/// quantities and the scenario's invariant checks.
struct ScenarioReport {
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<ReportBranch> branches;
  std::vector<std::pair<std::string, double>> quantities;
  std::vector<CaseAssertion> assertions;
  std::optional<WorldTree> tree;

  bool all_pass() const;
};

/// Rounds to 12 significant digits; all serialized floats pass through this.
double round12(double x);

/// {scenario, params, branches, quantities, assertions[, tree]}; branch
/// weights revalidated to sum to 1 when a branch table is present.
std::string report_to_json(const ScenarioReport& report);

/// RFC-4180-style branch table: header label,weight,exact.
std::string report_to_csv(const ScenarioReport& report);

WorldTree tree_from_json(const std::string& text);

}  // namespace manyworlds

#endif
