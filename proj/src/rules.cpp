#include "survhte/rules.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace survhte {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

Rule make_rule(std::vector<Condition> conditions) {
  if (conditions.empty()) throw DataError("a rule needs at least one condition");

  // Ne against {0,1} is the same subgroup as Eq against the other level.
  for (Condition& c : conditions) {
    if (c.op == RuleOp::Ne) {
      if (c.value != 0.0 && c.value != 1.0)
        throw DataError("binary comparator against a non-binary value");
      c.op = RuleOp::Eq;
      c.value = 1.0 - c.value;
    }
    if (c.op == RuleOp::Eq && c.value != 0.0 && c.value != 1.0)
      throw DataError("binary comparator against a non-binary value");
    if (!std::isfinite(c.value)) throw DataError("rule threshold must be finite");
  }

  std::sort(conditions.begin(), conditions.end());
  std::vector<Condition> merged;
  std::size_t i = 0;
  while (i < conditions.size()) {
    const int var = conditions[i].var;
    bool has_le = false, has_gt = false, has_eq = false;
    double le = 0.0, gt = 0.0, eq = 0.0;
    for (; i < conditions.size() && conditions[i].var == var; ++i) {
      const Condition& c = conditions[i];
      switch (c.op) {
        case RuleOp::Le:
          le = has_le ? std::min(le, c.value) : c.value;
          has_le = true;
          break;
        case RuleOp::Gt:
          gt = has_gt ? std::max(gt, c.value) : c.value;
          has_gt = true;
          break;
        case RuleOp::Eq:
          if (has_eq && eq != c.value) throw DataError("contradictory rule conditions");
          eq = c.value;
          has_eq = true;
          break;
        case RuleOp::Ne:
          break;  // rewritten above
      }
    }
    if (has_eq && (has_le || has_gt))
      throw DataError("binary and continuous comparators on the same covariate");
    if (has_le && has_gt && !(gt < le)) throw DataError("contradictory rule conditions");
    if (has_le) merged.push_back({var, RuleOp::Le, le});
    if (has_gt) merged.push_back({var, RuleOp::Gt, gt});
    if (has_eq) merged.push_back({var, RuleOp::Eq, eq});
  }
  std::sort(merged.begin(), merged.end());
  return Rule{std::move(merged), 0.0};
}

bool evaluate_rule(const Rule& r, const double* row, std::size_t p) {
  if (r.conditions.empty()) throw DataError("cannot evaluate an empty rule");
  for (const Condition& c : r.conditions) {
    if (c.var < 0 || static_cast<std::size_t>(c.var) >= p)
      throw DataError("rule references covariate index out of range");
    const double v = row[c.var];
    bool ok = false;
    switch (c.op) {
      case RuleOp::Le: ok = v <= c.value; break;
      case RuleOp::Gt: ok = v > c.value; break;
      case RuleOp::Eq: ok = v == c.value; break;
      case RuleOp::Ne: ok = v != c.value; break;
    }
    if (!ok) return false;
  }
  return true;
}

std::vector<Rule> dedup_rules(const std::vector<Rule>& rules, const Matrix& x,
                              const std::vector<std::size_t>& rows) {
  const std::size_t n = rows.size();
  if (n == 0) throw DataError("dedup needs at least one training row");

  std::vector<Rule> out;
  std::map<std::vector<Condition>, bool> seen_forms;
  std::map<std::vector<std::uint64_t>, bool> seen_bits;

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> bits(words), complement(words);
  const std::uint64_t tail_mask = (n % 64 == 0) ? ~0ULL : ((1ULL << (n % 64)) - 1);

  for (const Rule& raw : rules) {
    Rule r = make_rule(raw.conditions);  // canonical form
    if (seen_forms.contains(r.conditions)) continue;
    seen_forms.emplace(r.conditions, true);

    std::fill(bits.begin(), bits.end(), 0ULL);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (evaluate_rule(r, x.row(rows[k]), x.cols())) {
        bits[k / 64] |= 1ULL << (k % 64);
        ++ones;
      }
    }
    if (ones == 0 || ones == n) continue;  // constant on the training set

    for (std::size_t wi = 0; wi < words; ++wi) complement[wi] = ~bits[wi];
    complement[words - 1] &= tail_mask;
    if (seen_bits.contains(complement)) continue;  // complementary pair, keep the first
    seen_bits.emplace(bits, true);

    r.support = static_cast<double>(ones) / static_cast<double>(n);
    out.push_back(std::move(r));
  }
  return out;
}

std::string rule_op_name(RuleOp op) {
  switch (op) {
    case RuleOp::Le: return "<=";
    case RuleOp::Gt: return ">";
    case RuleOp::Eq: return "=";
    case RuleOp::Ne: return "!=";
  }
  return "?";
}

RuleOp rule_op_from_name(const std::string& name) {
  if (name == "<=") return RuleOp::Le;
  if (name == ">") return RuleOp::Gt;
  if (name == "=") return RuleOp::Eq;
  if (name == "!=") return RuleOp::Ne;
  throw DataError("unknown rule comparator '" + name + "'");
}

std::string rule_text(const Rule& r, const std::vector<std::string>& covariate_names) {
  std::string out;
  for (std::size_t k = 0; k < r.conditions.size(); ++k) {
    const Condition& c = r.conditions[k];
    if (k > 0) out += " and ";
    out += covariate_names[c.var] + " " + rule_op_name(c.op) + " " + fmt(c.value);
  }
  return out;
}

nlohmann::json rule_to_json(const Rule& r, const std::vector<std::string>& covariate_names) {
  nlohmann::json conds = nlohmann::json::array();
  for (const Condition& c : r.conditions) {
    conds.push_back({{"var", covariate_names[c.var]},
                     {"op", rule_op_name(c.op)},
                     {"value", c.value}});
  }
  return conds;
}

Rule rule_from_json(const nlohmann::json& j, const std::vector<std::string>& covariate_names) {
  std::vector<Condition> conds;
  for (const auto& cj : j) {
    Condition c;
    const std::string name = cj.at("var").get<std::string>();
    auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
    if (it == covariate_names.end())
      throw DataError("model rule references unknown covariate '" + name + "'");
    c.var = static_cast<int>(it - covariate_names.begin());
    c.op = rule_op_from_name(cj.at("op").get<std::string>());
    c.value = cj.at("value").get<double>();
    conds.push_back(c);
  }
  return make_rule(std::move(conds));
}

}  // namespace survhte
