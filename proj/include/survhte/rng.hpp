#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace survhte {

// xoshiro256++ with splitmix64 seeding. All distributions are hand-rolled on
// top of next_u64() so that streams are bit-reproducible across platforms and
// standard libraries; std::<distribution> output is implementation-defined
// and would break the byte-identical-output contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream keyed by (seed, path...). Work items (replicate, tree,
  // node, ...) derive their own stream so results do not depend on thread
  // count or execution order.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();

  // Unbiased integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform on (0, 1]; never returns 0 so -log(u) is finite.
  double uniform();

  // Standard normal, Marsaglia polar method with one cached deviate.
  double normal();

  // Exponential with the given rate (> 0).
  double exponential(double rate);

  bool bernoulli(double p);

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer; used for stream derivation and hashing.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace survhte
