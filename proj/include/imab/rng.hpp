#ifndef IMAB_RNG_HPP
#define IMAB_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

#include "imab/types.hpp"

namespace imab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic stream seed from a master seed and a path of stream ids.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t id : path) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

// mt19937_64 is fully specified by the standard; the distributions below are
// implemented here so draws do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn from a probability vector by inverse CDF.
  template <typename Derived>
  Index categorical(const Eigen::MatrixBase<Derived>& probs) {
    const double u = uniform();
    double cumulative = 0.0;
    Index last_positive = 0;
    for (Index i = 0; i < probs.size(); ++i) {
      if (probs(i) <= 0.0) continue;
      last_positive = i;
      cumulative += probs(i);
      if (u < cumulative) return i;
    }
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace imab

#endif  // IMAB_RNG_HPP
