#include "survhte/simgen.hpp"

#include <algorithm>
#include <cmath>

namespace survhte {

double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace {

constexpr char kPropensityLp[] =
    "0.4 - 0.3*x1 - 0.2*x6 - 0.3*x2 - 0.35*x7 - 0.2*x3 - 0.25*x8";

// Covariates binarized in the high-dimensional design: 1..5 and 11..55
// (1-based).
bool highdim_binary(std::size_t j0) {
  std::size_t j = j0 + 1;
  return j <= 5 || (j >= 11 && j <= 55);
}

}  // namespace

SimScenario SimScenario::builtin(const std::string& id, CovariateSetting setting) {
  SimScenario scn;
  scn.scenario_id = id;
  scn.setting = setting;
  scn.p = (setting == CovariateSetting::Independent) ? 10 : 100;
  scn.shape = 2.0;
  scn.propensity_lp = CovariateExpr::parse(kPropensityLp);
  if (id == "s1") {
    scn.scale0 = 16.0;
    scn.scale1 = 26.0;
    scn.base_effect = CovariateExpr::parse("2*x6 - 1.2*x7");
    scn.treat_effect = CovariateExpr::parse("2.8*x1 + 1.4*x2");
  } else if (id == "s2") {
    scn.scale0 = 20.0;
    scn.scale1 = 22.0;
    scn.base_effect = CovariateExpr::parse("1.6*x1 - 1.4*x6 - 1.2*x7");
    scn.treat_effect = CovariateExpr::parse("2.5*x1 - 1.8*x2 - 2*x3");
  } else if (id == "s3") {
    scn.scale0 = 20.0;
    scn.scale1 = 22.0;
    scn.base_effect = CovariateExpr::parse("1.6*x1 - 1.4*x6 - 1.2*x7 - x1*x7 - 0.8*x8^2");
    scn.treat_effect = CovariateExpr::parse("2.5*x1 - 1.8*x2 - 2*x3 - 1.4*x1*x3");
  } else {
    throw UsageError("unknown scenario '" + id + "' (expected s1, s2 or s3)");
  }
  return scn;
}

double SimScenario::effect_shift(const double* x, std::uint8_t arm) const {
  double f = base_effect.eval(x, p);
  if (arm == 1) f += treat_effect.eval(x, p);
  return f;
}

double SimScenario::true_survival(double t, const double* x, std::uint8_t arm) const {
  if (t <= 0.0) return 1.0;
  const double scale = arm == 1 ? scale1 : scale0;
  return std::exp(-std::pow(t / scale, shape) * std::exp(effect_shift(x, arm)));
}

double SimScenario::true_propensity(const double* x) const {
  return expit(propensity_lp.eval(x, p));
}

std::vector<CovariateKind> SimScenario::covariate_kinds() const {
  std::vector<CovariateKind> kinds(p, CovariateKind::Continuous);
  if (setting == CovariateSetting::Independent) {
    for (std::size_t j = 0; j < p && j < 5; ++j) kinds[j] = CovariateKind::Binary;
  } else {
    for (std::size_t j = 0; j < p; ++j)
      if (highdim_binary(j)) kinds[j] = CovariateKind::Binary;
  }
  return kinds;
}

std::vector<std::string> SimScenario::covariate_names() const {
  std::vector<std::string> names(p);
  for (std::size_t j = 0; j < p; ++j) names[j] = "x" + std::to_string(j + 1);
  return names;
}

Matrix gen_covariates(const SimScenario& scn, std::size_t n, Rng& rng) {
  if (n < 1) throw DataError("need n >= 1");
  Matrix x(n, scn.p);
  if (scn.setting == CovariateSetting::Independent) {
    for (std::size_t i = 0; i < n; ++i) {
      double* row = x.row(i);
      for (std::size_t j = 0; j < scn.p; ++j) {
        double z = rng.normal();
        row[j] = (j < 5) ? (z > 0.0 ? 1.0 : 0.0) : z;
      }
    }
  } else {
    // AR(1) construction of MVN(0, 0.5*Sigma) with sigma_jj' = exp(-|j-j'|):
    // marginal variance 0.5, lag-one correlation exp(-1).
    const double rho = std::exp(-1.0);
    const double sd0 = std::sqrt(0.5);
    const double sd_innov = std::sqrt(0.5 * (1.0 - rho * rho));
    for (std::size_t i = 0; i < n; ++i) {
      double* row = x.row(i);
      double z = sd0 * rng.normal();
      row[0] = z;
      for (std::size_t j = 1; j < scn.p; ++j) {
        z = rho * z + sd_innov * rng.normal();
        row[j] = z;
      }
      for (std::size_t j = 0; j < scn.p; ++j)
        if (highdim_binary(j)) row[j] = row[j] > 0.0 ? 1.0 : 0.0;
    }
  }
  return x;
}

std::vector<std::uint8_t> assign_treatment(const Matrix& x, const SimScenario& scn, Rng& rng) {
  std::vector<std::uint8_t> a(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    a[i] = rng.bernoulli(scn.true_propensity(x.row(i))) ? 1 : 0;
  }
  return a;
}

double CalibratedCensoring::draw(Rng& rng, const double* x) const {
  switch (kind) {
    case CensoringKind::None:
      return std::numeric_limits<double>::infinity();
    case CensoringKind::IndependentExponential:
      return rng.exponential(rate);
    case CensoringKind::CovariateDependentWeibull: {
      const double lp = b0 + b1 * x[0] + b2 * x[1];
      return -2.0 * std::log(rng.uniform()) / std::exp(lp);
    }
  }
  return std::numeric_limits<double>::infinity();
}

double CalibratedCensoring::survival(double c, const double* x) const {
  if (c <= 0.0) return 1.0;
  switch (kind) {
    case CensoringKind::None:
      return 1.0;
    case CensoringKind::IndependentExponential:
      return std::exp(-rate * c);
    case CensoringKind::CovariateDependentWeibull: {
      const double lp = b0 + b1 * x[0] + b2 * x[1];
      return std::exp(-c * std::exp(lp) / 2.0);
    }
  }
  return 1.0;
}

Outcomes gen_outcomes(const Matrix& x, const std::vector<std::uint8_t>& treatment,
                      const SimScenario& scn, const CalibratedCensoring& cal, Rng& rng) {
  const std::size_t n = x.rows();
  if (treatment.size() != n) throw DataError("treatment length mismatch");
  Outcomes out;
  out.time.resize(n);
  out.event.resize(n);
  out.latent_t.resize(n);
  out.latent_c.resize(n);
  const double inv_shape = 1.0 / scn.shape;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    const std::uint8_t a = treatment[i];
    const double scale = a == 1 ? scn.scale1 : scn.scale0;
    const double u = rng.uniform();
    const double t = scale * std::pow(-std::log(u) / std::exp(scn.effect_shift(row, a)), inv_shape);
    const double c = cal.draw(rng, row);
    out.latent_t[i] = t;
    out.latent_c[i] = c;
    out.time[i] = std::min(t, c);
    out.event[i] = t < c ? 1 : 0;
  }
  return out;
}

CalibratedCensoring calibrate_censoring(const SimScenario& scn, double target_rate, Rng& rng,
                                        std::size_t mc_size, double tol) {
  if (target_rate < 0.0 || target_rate >= 1.0)
    throw UsageError("censoring target rate must lie in [0, 1)");

  CalibratedCensoring cal;
  cal.kind = scn.censoring.kind;
  cal.b1 = scn.censoring.b1;
  cal.b2 = scn.censoring.b2;
  if (target_rate == 0.0 || scn.censoring.kind == CensoringKind::None) {
    cal.kind = CensoringKind::None;
    return cal;
  }

  // Common random numbers: draw (X, A, T) and the censoring uniform once,
  // then the empirical rate is a monotone function of the parameter.
  std::vector<double> latent_t(mc_size);
  std::vector<double> base(mc_size);  // parameter-free part of C
  const double inv_shape = 1.0 / scn.shape;
  for (std::size_t i = 0; i < mc_size; ++i) {
    Matrix row = gen_covariates(scn, 1, rng);
    const double* x = row.row(0);
    const std::uint8_t a = rng.bernoulli(scn.true_propensity(x)) ? 1 : 0;
    const double scale = a == 1 ? scn.scale1 : scn.scale0;
    latent_t[i] =
        scale * std::pow(-std::log(rng.uniform()) / std::exp(scn.effect_shift(x, a)), inv_shape);
    const double lu = -std::log(rng.uniform());
    if (scn.censoring.kind == CensoringKind::IndependentExponential) {
      base[i] = lu;  // C = base / rate
    } else {
      base[i] = 2.0 * lu / std::exp(cal.b1 * x[0] + cal.b2 * x[1]);  // C = base * exp(-b0)
    }
  }

  const bool exponential = scn.censoring.kind == CensoringKind::IndependentExponential;
  auto censor_rate = [&](double param) {
    std::size_t censored = 0;
    for (std::size_t i = 0; i < mc_size; ++i) {
      const double c = exponential ? base[i] / param : base[i] * std::exp(-param);
      if (!(latent_t[i] < c)) ++censored;
    }
    return static_cast<double>(censored) / static_cast<double>(mc_size);
  };

  // Rate is nondecreasing in the parameter in both families.
  double lo = exponential ? 1e-9 : -30.0;
  double hi = exponential ? 1.0 : 0.0;
  int expansions = 0;
  while (censor_rate(hi) < target_rate) {
    if (++expansions > 80) throw NumericalError("censoring calibration could not bracket the target rate");
    hi = exponential ? hi * 2.0 : hi + 2.0;
  }
  expansions = 0;
  while (censor_rate(lo) > target_rate) {
    if (++expansions > 80) throw NumericalError("censoring calibration could not bracket the target rate");
    lo = exponential ? lo / 2.0 : lo - 2.0;
  }

  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = exponential ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    const double r = censor_rate(mid);
    if (std::fabs(r - target_rate) < tol) {
      cal.achieved_rate = r;
      if (exponential) cal.rate = mid;
      else cal.b0 = mid;
      return cal;
    }
    if (r < target_rate) lo = mid;
    else hi = mid;
  }
  throw NumericalError("censoring calibration did not converge to the target rate");
}

TruthTable true_cate(const Matrix& x, const SimScenario& scn, const Horizon& h) {
  const std::size_t n = x.rows();
  TruthTable t;
  t.tau.resize(n);
  t.propensity.resize(n);
  t.s0.resize(n);
  t.s1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    t.s0[i] = scn.true_survival(h.t_star, row, 0);
    t.s1[i] = scn.true_survival(h.t_star, row, 1);
    t.tau[i] = t.s1[i] - t.s0[i];
    t.propensity[i] = scn.true_propensity(row);
  }
  return t;
}

Dataset simulate_trial(const SimScenario& scn, std::size_t n, const CalibratedCensoring& cal,
                       Rng& rng) {
  Dataset d;
  d.covariates = gen_covariates(scn, n, rng);
  d.treatment = assign_treatment(d.covariates, scn, rng);
  Outcomes out = gen_outcomes(d.covariates, d.treatment, scn, cal, rng);
  d.n = n;
  d.p = scn.p;
  d.covariate_names = scn.covariate_names();
  d.covariate_kinds = scn.covariate_kinds();
  d.time = std::move(out.time);
  d.event = std::move(out.event);
  d.validate();
  return d;
}

void to_json(nlohmann::json& j, const SimScenario& scn) {
  j = nlohmann::json{
      {"scenario", scn.scenario_id},
      {"setting", scn.setting == CovariateSetting::Independent ? "independent" : "highdim"},
      {"p", scn.p},
      {"shape", scn.shape},
      {"scale0", scn.scale0},
      {"scale1", scn.scale1},
      {"base_effect", scn.base_effect.to_string()},
      {"treat_effect", scn.treat_effect.to_string()},
      {"propensity", scn.propensity_lp.to_string()},
      {"seed", scn.seed},
  };
  switch (scn.censoring.kind) {
    case CensoringKind::None:
      j["censoring"] = {{"kind", "none"}};
      break;
    case CensoringKind::IndependentExponential:
      j["censoring"] = {{"kind", "independent_exponential"},
                        {"target_rate", scn.censoring.target_rate}};
      break;
    case CensoringKind::CovariateDependentWeibull:
      j["censoring"] = {{"kind", "covariate_dependent_weibull"},
                        {"target_rate", scn.censoring.target_rate},
                        {"b1", scn.censoring.b1},
                        {"b2", scn.censoring.b2}};
      break;
  }
}

void from_json(const nlohmann::json& j, SimScenario& scn) {
  scn.scenario_id = j.at("scenario").get<std::string>();
  std::string setting = j.at("setting").get<std::string>();
  scn.setting = setting == "independent" ? CovariateSetting::Independent
                                         : CovariateSetting::HighdimCorrelated;
  scn.p = j.at("p").get<std::size_t>();
  scn.shape = j.at("shape").get<double>();
  scn.scale0 = j.at("scale0").get<double>();
  scn.scale1 = j.at("scale1").get<double>();
  scn.base_effect = CovariateExpr::parse(j.at("base_effect").get<std::string>());
  scn.treat_effect = CovariateExpr::parse(j.at("treat_effect").get<std::string>());
  scn.propensity_lp = CovariateExpr::parse(j.at("propensity").get<std::string>());
  scn.seed = j.at("seed").get<std::uint64_t>();
  const auto& c = j.at("censoring");
  std::string kind = c.at("kind").get<std::string>();
  if (kind == "none") {
    scn.censoring.kind = CensoringKind::None;
    scn.censoring.target_rate = 0.0;
  } else if (kind == "independent_exponential") {
    scn.censoring.kind = CensoringKind::IndependentExponential;
    scn.censoring.target_rate = c.at("target_rate").get<double>();
  } else if (kind == "covariate_dependent_weibull") {
    scn.censoring.kind = CensoringKind::CovariateDependentWeibull;
    scn.censoring.target_rate = c.at("target_rate").get<double>();
    scn.censoring.b1 = c.value("b1", 0.5);
    scn.censoring.b2 = c.value("b2", -0.5);
  } else {
    throw DataError("unknown censoring kind '" + kind + "'");
  }
}

void to_json(nlohmann::json& j, const CalibratedCensoring& cal) {
  j = nlohmann::json{{"rate", cal.rate},
                     {"b0", cal.b0},
                     {"b1", cal.b1},
                     {"b2", cal.b2},
                     {"achieved_rate", cal.achieved_rate}};
  switch (cal.kind) {
    case CensoringKind::None: j["kind"] = "none"; break;
    case CensoringKind::IndependentExponential: j["kind"] = "independent_exponential"; break;
    case CensoringKind::CovariateDependentWeibull: j["kind"] = "covariate_dependent_weibull"; break;
  }
}

void from_json(const nlohmann::json& j, CalibratedCensoring& cal) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") cal.kind = CensoringKind::None;
  else if (kind == "independent_exponential") cal.kind = CensoringKind::IndependentExponential;
  else if (kind == "covariate_dependent_weibull") cal.kind = CensoringKind::CovariateDependentWeibull;
  else throw DataError("unknown censoring kind '" + kind + "'");
  cal.rate = j.value("rate", 0.0);
  cal.b0 = j.value("b0", 0.0);
  cal.b1 = j.value("b1", 0.0);
  cal.b2 = j.value("b2", 0.0);
  cal.achieved_rate = j.value("achieved_rate", 0.0);
}

}  // namespace survhte
