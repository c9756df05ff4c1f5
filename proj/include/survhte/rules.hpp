#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "survhte/common.hpp"

namespace survhte {

// Comparators for rule conditions. Binary covariates use Eq/Ne against {0,1};
// continuous covariates use Le/Gt against a real threshold.
enum class RuleOp : std::uint8_t { Le, Gt, Eq, Ne };

struct Condition {
  int var = 0;  // covariate column index
  RuleOp op = RuleOp::Le;
  double value = 0.0;

  auto operator<=>(const Condition&) const = default;
};

// Conjunction of conditions in canonical form: sorted by (var, op, value),
// at most one Le and one Gt per continuous covariate (intervals merged),
// Ne rewritten as Eq, no contradictory pair.
struct Rule {
  std::vector<Condition> conditions;
  double support = 0.0;  // fraction of complete-case training subjects satisfied

  bool operator==(const Rule& other) const { return conditions == other.conditions; }
};

// Canonicalizes a conjunction. Throws DataError on an empty conjunction or a
// contradiction (empty subgroup).
Rule make_rule(std::vector<Condition> conditions);

bool evaluate_rule(const Rule& r, const double* row, std::size_t p);

// Canonical-duplicate removal, then constant-rule removal, then empirical
// complement removal (r + r' == 1 on every training row); first occurrence
// wins. Supports are filled in on the way. rows indexes the complete cases.
std::vector<Rule> dedup_rules(const std::vector<Rule>& rules, const Matrix& x,
                              const std::vector<std::size_t>& rows);

std::string rule_op_name(RuleOp op);
RuleOp rule_op_from_name(const std::string& name);

// "x1 = 1 and x6 > 0.52"
std::string rule_text(const Rule& r, const std::vector<std::string>& covariate_names);

nlohmann::json rule_to_json(const Rule& r, const std::vector<std::string>& covariate_names);
Rule rule_from_json(const nlohmann::json& j, const std::vector<std::string>& covariate_names);

}  // namespace survhte
