#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace mdta2g {

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for stream `index` under `seed`. Pure function of both inputs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Seeded generator with fully specified derived distributions so that every
// stream is reproducible across standard libraries:
//   uniform()        = (next() >> 11) * 2^-53
//   uniform_int(n)   = next() % n
//   normal()         = Box-Muller on two uniforms, both outputs used
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t uniform_int(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mdta2g
