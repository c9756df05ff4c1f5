#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "survhte/common.hpp"
#include "survhte/dataset.hpp"
#include "survhte/expr.hpp"
#include "survhte/rng.hpp"

namespace survhte {

enum class CovariateSetting : std::uint8_t { Independent, HighdimCorrelated };

enum class CensoringKind : std::uint8_t {
  None,
  IndependentExponential,
  CovariateDependentWeibull,
};

struct CensoringSpec {
  CensoringKind kind = CensoringKind::IndependentExponential;
  double target_rate = 0.3;
  // slopes of the dependent-censoring linear predictor; the intercept b0 is
  // calibrated to hit target_rate
  double b1 = 0.5;
  double b2 = -0.5;
};

// Result of calibration; evaluable both as a sampler and as the exact
// censoring-survival function G (the oracle used in tests).
struct CalibratedCensoring {
  CensoringKind kind = CensoringKind::None;
  double rate = 0.0;  // exponential rate
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double achieved_rate = 0.0;  // empirical rate on the calibration sample

  double draw(Rng& rng, const double* x) const;
  double survival(double c, const double* x) const;  // exact G(c | x)
};

// Weibull generating model plus everything needed to replay it: effect
// functions, propensity, censoring and covariate design. Doubles as the
// ground-truth oracle via the closed-form conditional survivals.
struct SimScenario {
  std::string scenario_id = "s1";
  CovariateSetting setting = CovariateSetting::Independent;
  std::size_t p = 10;
  double shape = 2.0;    // eta
  double scale0 = 16.0;  // lambda_0
  double scale1 = 26.0;  // lambda_1
  CovariateExpr base_effect;    // b(X), shared across arms
  CovariateExpr treat_effect;   // h(X), treatment arm only
  CovariateExpr propensity_lp;  // logit e(X)
  CensoringSpec censoring;
  std::uint64_t seed = 1;

  // Built-in scenarios s1/s2/s3 in either covariate setting.
  static SimScenario builtin(const std::string& id, CovariateSetting setting);

  double effect_shift(const double* x, std::uint8_t arm) const;  // f_a(x)
  double true_survival(double t, const double* x, std::uint8_t arm) const;
  double true_propensity(const double* x) const;

  std::vector<CovariateKind> covariate_kinds() const;
  std::vector<std::string> covariate_names() const;
};

struct TruthTable {
  std::vector<double> tau;  // S_1(t*|x) - S_0(t*|x)
  std::vector<double> propensity;
  std::vector<double> s0;
  std::vector<double> s1;
};

Matrix gen_covariates(const SimScenario& scn, std::size_t n, Rng& rng);

std::vector<std::uint8_t> assign_treatment(const Matrix& x, const SimScenario& scn, Rng& rng);

struct Outcomes {
  std::vector<double> time;
  std::vector<std::uint8_t> event;
  std::vector<double> latent_t;
  std::vector<double> latent_c;
};

Outcomes gen_outcomes(const Matrix& x, const std::vector<std::uint8_t>& treatment,
                      const SimScenario& scn, const CalibratedCensoring& cal, Rng& rng);

// Bisection on the censoring parameter over a Monte Carlo sample until the
// empirical censoring rate is within tol of the target.
CalibratedCensoring calibrate_censoring(const SimScenario& scn, double target_rate, Rng& rng,
                                        std::size_t mc_size = 100000, double tol = 0.005);

TruthTable true_cate(const Matrix& x, const SimScenario& scn, const Horizon& h);

// Full replicate: covariates, treatment, outcomes, assembled Dataset.
Dataset simulate_trial(const SimScenario& scn, std::size_t n, const CalibratedCensoring& cal,
                       Rng& rng);

double expit(double z);

void to_json(nlohmann::json& j, const SimScenario& scn);
void from_json(const nlohmann::json& j, SimScenario& scn);
void to_json(nlohmann::json& j, const CalibratedCensoring& cal);
void from_json(const nlohmann::json& j, CalibratedCensoring& cal);

}  // namespace survhte
