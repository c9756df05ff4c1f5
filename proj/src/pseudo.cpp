#include "survhte/pseudo.hpp"

#include <cassert>
#include <cmath>

namespace survhte {

std::string learner_name(Learner l) {
  switch (l) {
    case Learner::DR: return "dr";
    case Learner::DEA: return "dea";
    case Learner::R: return "r";
  }
  return "?";
}

Learner learner_from_name(const std::string& name) {
  if (name == "dr") return Learner::DR;
  if (name == "dea") return Learner::DEA;
  if (name == "r") return Learner::R;
  throw UsageError("unknown learner '" + name + "' (expected dr, dea or r)");
}

std::vector<double> ipcw_weights(const Dataset& d, const Horizon& h, const NuisanceFit& nf) {
  const std::vector<HorizonStatus> status = classify_at_horizon(d, h);
  std::vector<double> w(d.n, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    switch (status[i]) {
      case HorizonStatus::EventBeforeHorizon:
        w[i] = 1.0 / nf.censor.floored(i, d.time[i], /*left_limit=*/true, nf.censor_floor);
        break;
      case HorizonStatus::SurvivedPastHorizon:
        w[i] = 1.0 / nf.censor.floored(i, h.t_star, /*left_limit=*/false, nf.censor_floor);
        break;
      case HorizonStatus::CensoredUnknown:
        w[i] = 0.0;
        break;
    }
  }
  return w;
}

std::vector<PseudoSample> build_pseudo(const Dataset& d, const Horizon& h, const NuisanceFit& nf,
                                       Learner learner) {
  if (nf.e_hat.size() != d.n || nf.s1_hat.size() != d.n || nf.s0_hat.size() != d.n ||
      nf.s_pool_hat.size() != d.n) {
    throw DataError("nuisance fit does not match the dataset");
  }
  const std::vector<HorizonStatus> status = classify_at_horizon(d, h);
  const std::vector<double> wc = ipcw_weights(d, h, nf);

  std::vector<PseudoSample> out(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    PseudoSample& s = out[i];
    s.index = i;
    if (!is_complete(status[i])) continue;
    s.complete = true;
    s.w_censor = wc[i];

    const double a = static_cast<double>(d.treatment[i]);
    const double e = nf.e_hat[i];
    assert(e > 0.0 && e < 1.0);
    const double ind = status[i] == HorizonStatus::SurvivedPastHorizon ? 1.0 : 0.0;
    const double sign = 2.0 * a - 1.0;

    switch (learner) {
      case Learner::DR: {
        const double s_arm = d.treatment[i] == 1 ? nf.s1_hat[i] : nf.s0_hat[i];
        s.y_star = (a - e) / (e * (1.0 - e)) * (ind - s_arm) + nf.s1_hat[i] - nf.s0_hat[i];
        s.w_method = 1.0;
        break;
      }
      case Learner::DEA: {
        s.y_star = 2.0 * sign * (ind - nf.s_pool_hat[i]);
        s.w_method = sign * (a - e) / (4.0 * e * (1.0 - e));
        break;
      }
      case Learner::R: {
        s.y_star = (ind - nf.s_pool_hat[i]) / (a - e);
        s.w_method = (a - e) * (a - e);
        break;
      }
    }
  }
  return out;
}

double weighted_loss(const std::vector<PseudoSample>& samples,
                     const std::vector<double>& tau_hat) {
  if (tau_hat.size() != samples.size())
    throw DataError("predictions are not aligned with the pseudo samples");
  double total = 0.0;
  std::size_t n_complete = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].complete) continue;
    ++n_complete;
    const double r = samples[i].y_star - tau_hat[i];
    total += samples[i].w_censor * samples[i].w_method * r * r;
  }
  if (n_complete == 0) throw DataError("weighted loss over zero complete cases");
  return total / static_cast<double>(n_complete);
}

}  // namespace survhte
