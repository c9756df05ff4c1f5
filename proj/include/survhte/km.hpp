#pragma once

#include <cstdint>
#include <vector>

namespace survhte {

// Product-limit estimator. With flip_events=true the censoring indicator is
// treated as the event, giving the censoring-survival curve G(c) = P(C > c)
// used for IPCW. Ties follow the convention that events and censorings at
// time t are both still at risk at t.
class KaplanMeier {
 public:
  struct Step {
    double time;      // a drop time
    double survival;  // value of S at and after this time (right-continuous)
  };

  static KaplanMeier fit(const std::vector<double>& time,
                         const std::vector<std::uint8_t>& event, bool flip_events);

  // S(t): right-continuous, includes a drop at exactly t.
  double eval(double t) const;

  // S(t-): left limit, excludes a drop at exactly t.
  double eval_left(double t) const;

  const std::vector<Step>& steps() const { return steps_; }

 private:
  std::vector<Step> steps_;
};

}  // namespace survhte
