#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "survhte/dataset.hpp"
#include "survhte/nuisance.hpp"

namespace survhte {

enum class Learner : std::uint8_t { DR, DEA, R };

std::string learner_name(Learner l);
Learner learner_from_name(const std::string& name);

// Per-subject pseudo-ITE Y*, method weight w^M and censoring weight w^C.
// Incomplete cases stay in place with zero weights so indices align with the
// Dataset throughout.
struct PseudoSample {
  std::size_t index = 0;
  double y_star = 0.0;
  double w_method = 0.0;
  double w_censor = 0.0;
  bool complete = false;
};

// IPCW: 1/G(U- | X, A) for events before the horizon, 1/G(t* | X, A) for
// subjects known to survive past it, 0 for incomplete cases.
std::vector<double> ipcw_weights(const Dataset& d, const Horizon& h, const NuisanceFit& nf);

std::vector<PseudoSample> build_pseudo(const Dataset& d, const Horizon& h, const NuisanceFit& nf,
                                       Learner learner);

// (1/n^o) sum over complete cases of w^C w^M (Y* - tau_hat)^2.
double weighted_loss(const std::vector<PseudoSample>& samples,
                     const std::vector<double>& tau_hat);

}  // namespace survhte
