#include "survhte/km.hpp"

#include <algorithm>
#include <numeric>

#include "survhte/common.hpp"

namespace survhte {

KaplanMeier KaplanMeier::fit(const std::vector<double>& time,
                             const std::vector<std::uint8_t>& event, bool flip_events) {
  const std::size_t n = time.size();
  if (n == 0 || event.size() != n) throw DataError("Kaplan-Meier needs matching nonempty vectors");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  KaplanMeier km;
  double s = 1.0;
  std::size_t at_risk = n;
  std::size_t k = 0;
  while (k < n) {
    const double t = time[order[k]];
    std::size_t deaths = 0, others = 0;
    while (k < n && time[order[k]] == t) {
      bool is_event = (event[order[k]] == 1);
      if (flip_events) is_event = !is_event;
      if (is_event) ++deaths;
      else ++others;
      ++k;
    }
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      km.steps_.push_back({t, s});
    }
    at_risk -= deaths + others;
  }
  return km;
}

double KaplanMeier::eval(double t) const {
  // last step with time <= t
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double v, const Step& s) { return v < s.time; });
  if (it == steps_.begin()) return 1.0;
  return std::prev(it)->survival;
}

double KaplanMeier::eval_left(double t) const {
  // last step with time < t
  auto it = std::lower_bound(steps_.begin(), steps_.end(), t,
                             [](const Step& s, double v) { return s.time < v; });
  if (it == steps_.begin()) return 1.0;
  return std::prev(it)->survival;
}

}  // namespace survhte
