#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "survhte/dataset.hpp"
#include "survhte/forest.hpp"
#include "survhte/km.hpp"
#include "survhte/simgen.hpp"

namespace survhte {

enum class NuisanceProvenance : std::uint8_t { Estimated, Oracle };

struct NuisanceConfig {
  enum class Propensity : std::uint8_t { Forest, Oracle, Constant };
  enum class Survival : std::uint8_t { Forest, Oracle };
  enum class PooledMode : std::uint8_t { Direct, Mixture };
  enum class Censoring : std::uint8_t { KM, Forest, Oracle };

  Propensity propensity = Propensity::Forest;
  double constant_propensity = 0.5;
  Survival survival = Survival::Forest;
  // S(t*|X) for DEA/R: a forest fit ignoring the treatment arm (Direct), or
  // the propensity mixture of the two arm models.
  PooledMode pooled = PooledMode::Direct;
  Censoring censoring = Censoring::KM;
  int trees = 500;
  int min_node = 15;
  double clamp = 0.025;        // propensity kept inside [clamp, 1-clamp]
  double censor_floor = 0.01;  // G floored here before inversion
  std::uint64_t seed = 1;
  int threads = 0;
};

// Censoring-survival model G(c | X, A), evaluable per training row. Forest
// rows evaluate out of bag; the KM curve ignores covariates; the oracle form
// is exponential in c with a per-row hazard scale.
class CensorModel {
 public:
  enum class Kind : std::uint8_t { None, KM, Forest, Oracle };

  static CensorModel none();
  static CensorModel km_fit(const Dataset& d);
  static CensorModel forest_fit(const Dataset& d, const ForestConfig& cfg);
  static CensorModel oracle_fit(const CalibratedCensoring& cal, const Matrix& x);

  // Raw G for training row i; left_limit gives G(c-).
  double at(std::size_t row, double c, bool left_limit) const;
  double floored(std::size_t row, double c, bool left_limit, double floor_value) const;

  Kind kind() const { return kind_; }

 private:
  Kind kind_ = Kind::None;
  KaplanMeier km_;
  std::shared_ptr<SurvivalForest> forest_;
  std::vector<double> hazard_;  // oracle: G(c|x) = exp(-hazard * c)
};

struct NuisanceFit {
  std::vector<double> e_hat;       // clamped propensity
  std::vector<double> s1_hat;      // S_1(t*|X)
  std::vector<double> s0_hat;      // S_0(t*|X)
  std::vector<double> s_pool_hat;  // S(t*|X)
  CensorModel censor;
  double censor_floor = 0.01;
  double clamp = 0.025;
  NuisanceProvenance provenance = NuisanceProvenance::Estimated;
};

// Random-forest propensity with out-of-bag class probabilities, clamped.
std::vector<double> fit_propensity_forest(const Dataset& d, const NuisanceConfig& cfg);

// Survival forest on one arm (0/1) or pooled (-1); out-of-bag predictions for
// subjects in the fitted subset, ordinary ensemble predictions otherwise.
struct SubsetSurvivalModel {
  SurvivalForest forest;
  std::vector<std::int32_t> subset_row;  // dataset row -> row within subset, or -1

  std::vector<double> predict(const Dataset& d, double t) const;
};

SubsetSurvivalModel fit_arm_survival(const Dataset& d, int arm, const NuisanceConfig& cfg);

std::vector<double> fit_survival_forest(const Dataset& d, const Horizon& h, int arm,
                                        const NuisanceConfig& cfg);

// Product-limit estimator of the censoring distribution (censoring as the
// event). An all-events dataset yields G == 1.
KaplanMeier fit_censoring_km(const Dataset& d);

CensorModel fit_censoring_forest(const Dataset& d, const NuisanceConfig& cfg);

// Exact nuisances from the generating model; the testing seam.
NuisanceFit oracle_nuisance(const TruthTable& truth, const CalibratedCensoring& cal,
                            const Matrix& x, const NuisanceConfig& cfg);

// Everything Step 1 needs, per the config. truth/oracle_censor are required
// only for the oracle options.
NuisanceFit fit_nuisance(const Dataset& d, const Horizon& h, const NuisanceConfig& cfg,
                         const TruthTable* truth = nullptr,
                         const CalibratedCensoring* oracle_censor = nullptr);

void to_json(nlohmann::json& j, const NuisanceConfig& cfg);
void from_json(const nlohmann::json& j, NuisanceConfig& cfg);

}  // namespace survhte
