#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace fk {

// xoshiro256++ seeded through SplitMix64. Chosen over the standard-library
// engines because the integer stream is fully pinned by the algorithm, so a
// seed reproduces the same draws on every platform. Gaussian variates use the
// Marsaglia polar transform, which is pinned up to libm's log() rounding.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01();

  // Uniform integer on [0, n); unbiased via rejection. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal. Draws are cached in pairs.
  double gaussian();

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace fk
