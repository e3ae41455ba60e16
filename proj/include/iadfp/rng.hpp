#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace iadfp {

/// xoshiro256** seeded through splitmix64.
///
/// Every stochastic routine in the library takes one of these explicitly, so
/// a seed fixes the whole computation. `split()` derives an independent child
/// stream, which is how parallel loops get per-iteration streams without
/// depending on the thread schedule.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Marsaglia polar method, one value per call).
  double normal();
  /// Uniform integer in [0, n). Unbiased (Lemire rejection).
  std::uint64_t below(std::uint64_t n);

  Rng split();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

/// One splitmix64 step; exposed for deriving seeds from (seed, index) pairs.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace iadfp
