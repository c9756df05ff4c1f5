#include "survhte/nuisance.hpp"

#include <algorithm>
#include <cmath>

namespace survhte {

namespace {

double clamp_to(double v, double eps) { return std::min(std::max(v, eps), 1.0 - eps); }

ForestConfig forest_config(const NuisanceConfig& cfg, std::uint64_t salt) {
  ForestConfig fc;
  fc.trees = cfg.trees;
  fc.min_node = cfg.min_node;
  std::uint64_t sm = cfg.seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  fc.seed = splitmix64(sm);
  fc.threads = cfg.threads;
  return fc;
}

}  // namespace

// ---------------------------------------------------------------------------
// censoring model
// ---------------------------------------------------------------------------

CensorModel CensorModel::none() {
  CensorModel m;
  m.kind_ = Kind::None;
  return m;
}

CensorModel CensorModel::km_fit(const Dataset& d) {
  CensorModel m;
  m.kind_ = Kind::KM;
  m.km_ = KaplanMeier::fit(d.time, d.event, /*flip_events=*/true);
  return m;
}

CensorModel CensorModel::forest_fit(const Dataset& d, const ForestConfig& cfg) {
  if (std::none_of(d.event.begin(), d.event.end(), [](std::uint8_t e) { return e == 0; }))
    throw DataError("censoring forest requires at least one censored subject");
  // predictors (X, A); censoring is the event
  Matrix xa(d.n, d.p + 1);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double* src = d.covariates.row(i);
    double* dst = xa.row(i);
    std::copy(src, src + d.p, dst);
    dst[d.p] = static_cast<double>(d.treatment[i]);
  }
  std::vector<std::uint8_t> flipped(d.n);
  for (std::size_t i = 0; i < d.n; ++i) flipped[i] = d.event[i] == 1 ? 0 : 1;

  CensorModel m;
  m.kind_ = Kind::Forest;
  m.forest_ = std::make_shared<SurvivalForest>(SurvivalForest::fit(xa, d.time, flipped, cfg));
  return m;
}

CensorModel CensorModel::oracle_fit(const CalibratedCensoring& cal, const Matrix& x) {
  CensorModel m;
  m.kind_ = Kind::Oracle;
  m.hazard_.resize(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    switch (cal.kind) {
      case CensoringKind::None:
        m.hazard_[i] = 0.0;
        break;
      case CensoringKind::IndependentExponential:
        m.hazard_[i] = cal.rate;
        break;
      case CensoringKind::CovariateDependentWeibull:
        m.hazard_[i] = std::exp(cal.b0 + cal.b1 * x(i, 0) + cal.b2 * x(i, 1)) / 2.0;
        break;
    }
  }
  return m;
}

double CensorModel::at(std::size_t row, double c, bool left_limit) const {
  switch (kind_) {
    case Kind::None:
      return 1.0;
    case Kind::KM:
      return left_limit ? km_.eval_left(c) : km_.eval(c);
    case Kind::Forest:
      return left_limit ? forest_->oob_survival_left(row, c) : forest_->oob_survival(row, c);
    case Kind::Oracle:
      return c <= 0.0 ? 1.0 : std::exp(-hazard_[row] * c);
  }
  return 1.0;
}

double CensorModel::floored(std::size_t row, double c, bool left_limit, double floor_value) const {
  return std::max(at(row, c, left_limit), floor_value);
}

// ---------------------------------------------------------------------------
// nuisance fits
// ---------------------------------------------------------------------------

std::vector<double> fit_propensity_forest(const Dataset& d, const NuisanceConfig& cfg) {
  bool has0 = false, has1 = false;
  for (std::uint8_t a : d.treatment) (a == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw DataError("propensity fit requires both arms present");

  ClassificationForest forest =
      ClassificationForest::fit(d.covariates, d.treatment, forest_config(cfg, 1));
  std::vector<double> e = forest.oob_probabilities();
  for (double& v : e) v = clamp_to(v, cfg.clamp);
  return e;
}

SubsetSurvivalModel fit_arm_survival(const Dataset& d, int arm, const NuisanceConfig& cfg) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.n; ++i)
    if (arm < 0 || d.treatment[i] == static_cast<std::uint8_t>(arm)) rows.push_back(i);
  if (rows.empty()) throw DataError("survival fit: empty arm subset");

  Matrix x(rows.size(), d.p);
  std::vector<double> time(rows.size());
  std::vector<std::uint8_t> event(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double* src = d.covariates.row(rows[k]);
    std::copy(src, src + d.p, x.row(k));
    time[k] = d.time[rows[k]];
    event[k] = d.event[rows[k]];
  }
  if (std::none_of(event.begin(), event.end(), [](std::uint8_t e) { return e == 1; }))
    throw DataError("survival fit: no events in subset");

  SubsetSurvivalModel model{
      SurvivalForest::fit(x, time, event, forest_config(cfg, arm < 0 ? 2 : 3 + arm)),
      std::vector<std::int32_t>(d.n, -1)};
  for (std::size_t k = 0; k < rows.size(); ++k)
    model.subset_row[rows[k]] = static_cast<std::int32_t>(k);
  return model;
}

std::vector<double> SubsetSurvivalModel::predict(const Dataset& d, double t) const {
  std::vector<double> out(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    out[i] = subset_row[i] >= 0 ? forest.oob_survival(static_cast<std::size_t>(subset_row[i]), t)
                                : forest.survival(d.covariates.row(i), t);
  }
  return out;
}

std::vector<double> fit_survival_forest(const Dataset& d, const Horizon& h, int arm,
                                        const NuisanceConfig& cfg) {
  return fit_arm_survival(d, arm, cfg).predict(d, h.t_star);
}

KaplanMeier fit_censoring_km(const Dataset& d) {
  return KaplanMeier::fit(d.time, d.event, /*flip_events=*/true);
}

CensorModel fit_censoring_forest(const Dataset& d, const NuisanceConfig& cfg) {
  return CensorModel::forest_fit(d, forest_config(cfg, 5));
}

NuisanceFit oracle_nuisance(const TruthTable& truth, const CalibratedCensoring& cal,
                            const Matrix& x, const NuisanceConfig& cfg) {
  NuisanceFit nf;
  nf.provenance = NuisanceProvenance::Oracle;
  nf.clamp = cfg.clamp;
  nf.censor_floor = cfg.censor_floor;
  nf.e_hat = truth.propensity;
  for (double& v : nf.e_hat) v = clamp_to(v, cfg.clamp);
  nf.s1_hat = truth.s1;
  nf.s0_hat = truth.s0;
  nf.s_pool_hat.resize(truth.s1.size());
  for (std::size_t i = 0; i < nf.s_pool_hat.size(); ++i) {
    nf.s_pool_hat[i] = truth.propensity[i] * truth.s1[i] + (1.0 - truth.propensity[i]) * truth.s0[i];
  }
  nf.censor = CensorModel::oracle_fit(cal, x);
  return nf;
}

NuisanceFit fit_nuisance(const Dataset& d, const Horizon& h, const NuisanceConfig& cfg,
                         const TruthTable* truth, const CalibratedCensoring* oracle_censor) {
  const bool wants_oracle = cfg.propensity == NuisanceConfig::Propensity::Oracle ||
                            cfg.survival == NuisanceConfig::Survival::Oracle ||
                            cfg.censoring == NuisanceConfig::Censoring::Oracle;
  if (wants_oracle && truth == nullptr)
    throw UsageError("oracle nuisances requested but no truth table supplied");

  NuisanceFit nf;
  nf.clamp = cfg.clamp;
  nf.censor_floor = cfg.censor_floor;
  nf.provenance = wants_oracle ? NuisanceProvenance::Oracle : NuisanceProvenance::Estimated;

  switch (cfg.propensity) {
    case NuisanceConfig::Propensity::Forest:
      nf.e_hat = fit_propensity_forest(d, cfg);
      break;
    case NuisanceConfig::Propensity::Oracle:
      nf.e_hat = truth->propensity;
      for (double& v : nf.e_hat) v = clamp_to(v, cfg.clamp);
      break;
    case NuisanceConfig::Propensity::Constant:
      nf.e_hat.assign(d.n, clamp_to(cfg.constant_propensity, cfg.clamp));
      break;
  }

  if (cfg.survival == NuisanceConfig::Survival::Oracle) {
    nf.s1_hat = truth->s1;
    nf.s0_hat = truth->s0;
    nf.s_pool_hat.resize(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
      nf.s_pool_hat[i] =
          truth->propensity[i] * truth->s1[i] + (1.0 - truth->propensity[i]) * truth->s0[i];
    }
  } else {
    nf.s1_hat = fit_survival_forest(d, h, 1, cfg);
    nf.s0_hat = fit_survival_forest(d, h, 0, cfg);
    if (cfg.pooled == NuisanceConfig::PooledMode::Direct) {
      nf.s_pool_hat = fit_survival_forest(d, h, -1, cfg);
    } else {
      nf.s_pool_hat.resize(d.n);
      for (std::size_t i = 0; i < d.n; ++i)
        nf.s_pool_hat[i] = nf.e_hat[i] * nf.s1_hat[i] + (1.0 - nf.e_hat[i]) * nf.s0_hat[i];
    }
  }

  const bool any_censored =
      std::any_of(d.event.begin(), d.event.end(), [](std::uint8_t e) { return e == 0; });
  if (!any_censored) {
    nf.censor = CensorModel::none();
  } else {
    switch (cfg.censoring) {
      case NuisanceConfig::Censoring::KM: {
        CensorModel m;
        nf.censor = CensorModel::km_fit(d);
        break;
      }
      case NuisanceConfig::Censoring::Forest:
        nf.censor = fit_censoring_forest(d, cfg);
        break;
      case NuisanceConfig::Censoring::Oracle:
        if (oracle_censor == nullptr)
          throw UsageError("oracle censoring requested but no calibrated censoring supplied");
        nf.censor = CensorModel::oracle_fit(*oracle_censor, d.covariates);
        break;
    }
  }
  return nf;
}

void to_json(nlohmann::json& j, const NuisanceConfig& cfg) {
  const char* prop = cfg.propensity == NuisanceConfig::Propensity::Forest    ? "forest"
                     : cfg.propensity == NuisanceConfig::Propensity::Oracle ? "oracle"
                                                                            : "constant";
  j = nlohmann::json{
      {"propensity", prop},
      {"constant_propensity", cfg.constant_propensity},
      {"survival", cfg.survival == NuisanceConfig::Survival::Forest ? "forest" : "oracle"},
      {"pooled", cfg.pooled == NuisanceConfig::PooledMode::Direct ? "direct" : "mixture"},
      {"censoring", cfg.censoring == NuisanceConfig::Censoring::KM       ? "km"
                    : cfg.censoring == NuisanceConfig::Censoring::Forest ? "forest"
                                                                         : "oracle"},
      {"trees", cfg.trees},
      {"min_node", cfg.min_node},
      {"clamp", cfg.clamp},
      {"censor_floor", cfg.censor_floor},
  };
}

void from_json(const nlohmann::json& j, NuisanceConfig& cfg) {
  std::string prop = j.value("propensity", "forest");
  if (prop == "forest") cfg.propensity = NuisanceConfig::Propensity::Forest;
  else if (prop == "oracle") cfg.propensity = NuisanceConfig::Propensity::Oracle;
  else if (prop == "constant") cfg.propensity = NuisanceConfig::Propensity::Constant;
  else throw UsageError("unknown propensity option '" + prop + "'");
  cfg.constant_propensity = j.value("constant_propensity", 0.5);
  std::string surv = j.value("survival", "forest");
  if (surv == "forest") cfg.survival = NuisanceConfig::Survival::Forest;
  else if (surv == "oracle") cfg.survival = NuisanceConfig::Survival::Oracle;
  else throw UsageError("unknown survival option '" + surv + "'");
  std::string pooled = j.value("pooled", "direct");
  if (pooled == "direct") cfg.pooled = NuisanceConfig::PooledMode::Direct;
  else if (pooled == "mixture") cfg.pooled = NuisanceConfig::PooledMode::Mixture;
  else throw UsageError("unknown pooled option '" + pooled + "'");
  std::string cen = j.value("censoring", "km");
  if (cen == "km") cfg.censoring = NuisanceConfig::Censoring::KM;
  else if (cen == "forest") cfg.censoring = NuisanceConfig::Censoring::Forest;
  else if (cen == "oracle") cfg.censoring = NuisanceConfig::Censoring::Oracle;
  else throw UsageError("unknown censoring option '" + cen + "'");
  cfg.trees = j.value("trees", 500);
  cfg.min_node = j.value("min_node", 15);
  cfg.clamp = j.value("clamp", 0.025);
  cfg.censor_floor = j.value("censor_floor", 0.01);
}

}  // namespace survhte
