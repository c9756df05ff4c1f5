#include "survhte/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "survhte/common.hpp"

namespace survhte {

namespace {

struct Cursor {
  const std::string& s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool done() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("expression parse error at position " + std::to_string(i) + ": " + what);
  }
};

double parse_number(Cursor& c) {
  c.skip_ws();
  std::size_t start = c.i;
  while (c.i < c.s.size() &&
         (std::isdigit(static_cast<unsigned char>(c.s[c.i])) || c.s[c.i] == '.')) {
    ++c.i;
  }
  if (c.i == start) c.fail("expected a number");
  return std::stod(c.s.substr(start, c.i - start));
}

std::size_t parse_var(Cursor& c) {
  c.skip_ws();
  if (c.peek() != 'x' && c.peek() != 'X') c.fail("expected a covariate like x3");
  ++c.i;
  std::size_t start = c.i;
  while (c.i < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.i]))) ++c.i;
  if (c.i == start) c.fail("expected a covariate index after 'x'");
  long idx = std::stol(c.s.substr(start, c.i - start));
  if (idx < 1) c.fail("covariate indices are 1-based");
  return static_cast<std::size_t>(idx - 1);
}

}  // namespace

CovariateExpr CovariateExpr::parse(const std::string& text) {
  std::vector<Term> terms;
  Cursor c{text};
  bool first = true;
  while (!c.done()) {
    double sign = 1.0;
    char ch = c.peek();
    if (ch == '+' || ch == '-') {
      sign = (ch == '-') ? -1.0 : 1.0;
      ++c.i;
    } else if (!first) {
      c.fail("expected '+' or '-' between terms");
    }
    Term term;
    term.coef = sign;
    bool saw_factor = false;
    // Leading numeric coefficient is optional ("x1" == "1*x1").
    if (std::isdigit(static_cast<unsigned char>(c.peek())) || c.peek() == '.') {
      term.coef *= parse_number(c);
      saw_factor = true;
    }
    for (;;) {
      c.skip_ws();
      if (c.peek() == '*') {
        ++c.i;
      } else if (c.peek() != 'x' && c.peek() != 'X') {
        break;
      } else if (saw_factor && !term.factors.empty() && c.peek() != '\0') {
        // adjacency like "x1x3" is ambiguous; require '*'
        c.fail("expected '*' between factors");
      }
      Factor f;
      f.var = parse_var(c);
      if (c.peek() == '^') {
        ++c.i;
        f.power = static_cast<int>(parse_number(c));
        if (f.power < 1) c.fail("powers must be >= 1");
      }
      term.factors.push_back(f);
      saw_factor = true;
    }
    if (!saw_factor) c.fail("empty term");
    terms.push_back(std::move(term));
    first = false;
  }
  return CovariateExpr(std::move(terms));
}

double CovariateExpr::eval(const double* x, std::size_t p) const {
  double total = 0.0;
  for (const Term& t : terms_) {
    double v = t.coef;
    for (const Factor& f : t.factors) {
      if (f.var >= p) {
        throw DataError("expression references covariate x" + std::to_string(f.var + 1) +
                        " but only " + std::to_string(p) + " are available");
      }
      double base = x[f.var];
      for (int k = 0; k < f.power; ++k) v *= base;
    }
    total += v;
  }
  return total;
}

std::vector<std::size_t> CovariateExpr::variables() const {
  std::set<std::size_t> vars;
  for (const Term& t : terms_)
    for (const Factor& f : t.factors) vars.insert(f.var);
  return {vars.begin(), vars.end()};
}

std::string CovariateExpr::to_string() const {
  std::ostringstream out;
  bool first = true;
  for (const Term& t : terms_) {
    double c = t.coef;
    if (first) {
      if (c < 0) out << "-";
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    first = false;
    double mag = std::fabs(c);
    bool coef_shown = (mag != 1.0 || t.factors.empty());
    if (coef_shown) {
      std::ostringstream num;
      num.precision(15);
      num << mag;
      out << num.str();
    }
    for (std::size_t k = 0; k < t.factors.size(); ++k) {
      if (coef_shown || k > 0) out << "*";
      out << "x" << (t.factors[k].var + 1);
      if (t.factors[k].power != 1) out << "^" << t.factors[k].power;
    }
  }
  return out.str();
}

}  // namespace survhte
