#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survhte/common.hpp"

namespace survhte {

enum class CovariateKind : std::uint8_t { Binary, Continuous };

// One row per subject: covariates, arm, observed time U = min(T, C) and
// event indicator I(T < C). Immutable after construction; shared read-only
// across threads.
struct Dataset {
  std::size_t n = 0;
  std::size_t p = 0;
  Matrix covariates;                        // n x p
  std::vector<std::string> covariate_names;  // size p
  std::vector<CovariateKind> covariate_kinds;
  std::vector<std::uint8_t> treatment;  // in {0,1}
  std::vector<double> time;             // >= 0
  std::vector<std::uint8_t> event;      // in {0,1}
  std::vector<std::string> ids;         // empty or size n

  void validate() const;  // throws DataError on any invariant violation
  std::size_t covariate_index(const std::string& name) const;  // throws if absent
};

struct Horizon {
  double t_star = 0.0;  // > 0
};

// Horizon-relative outcome classification. CensoredUnknown iff the subject is
// censored strictly before t*; everyone else is a complete case.
enum class HorizonStatus : std::uint8_t {
  SurvivedPastHorizon,
  EventBeforeHorizon,
  CensoredUnknown,
};

std::vector<HorizonStatus> classify_at_horizon(const Dataset& d, const Horizon& h);

inline bool is_complete(HorizonStatus s) { return s != HorizonStatus::CensoredUnknown; }

std::size_t count_complete(const std::vector<HorizonStatus>& statuses);

// Smallest observed time with pooled Kaplan-Meier survival <= 0.5.
Horizon km_median_survival(const Dataset& d);

// Optional sidecar overriding column roles and covariate kinds.
struct CsvSchema {
  std::optional<std::string> id_column;
  std::string treatment_column = "treatment";
  std::string time_column = "time";
  std::string event_column = "event";
  // covariate name -> kind override; anything absent is inferred
  std::vector<std::pair<std::string, CovariateKind>> kind_overrides;

  static CsvSchema from_json_file(const std::string& path);
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = CsvSchema{});
void save_csv(const Dataset& d, const std::string& path);

}  // namespace survhte
