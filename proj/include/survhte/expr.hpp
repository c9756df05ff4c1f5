#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace survhte {

// Polynomial in the covariates: a sum of terms, each a coefficient times a
// product of (covariate, power) factors. Covers the scenario effect
// functions (linear terms, pairwise interactions, squares) while staying
// configurable from text, e.g. "2.5*x1 - 1.8*x2 - 2*x3 - 1.4*x1*x3".
class CovariateExpr {
 public:
  struct Factor {
    std::size_t var = 0;  // 0-based covariate index
    int power = 1;
  };
  struct Term {
    double coef = 0.0;
    std::vector<Factor> factors;  // empty -> constant term
  };

  CovariateExpr() = default;
  explicit CovariateExpr(std::vector<Term> terms) : terms_(std::move(terms)) {}

  // Parses "c*x<i>*x<j>^k [+-] ..."; variables are 1-based in the text.
  static CovariateExpr parse(const std::string& text);

  double eval(const double* x, std::size_t p) const;

  // Distinct covariates referenced by any term.
  std::vector<std::size_t> variables() const;

  // Round-trips through parse().
  std::string to_string() const;

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<Term> terms_;
};

}  // namespace survhte
