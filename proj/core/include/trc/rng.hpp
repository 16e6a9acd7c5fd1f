#pragma once

#include <cstdint>
#include <span>

namespace trc {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream key from a seed and a counter.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Counter-based stream: the k-th draw is a pure function of (key, k).
class Stream {
public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}
  constexpr Stream(std::uint64_t seed, std::uint64_t index) noexcept
      : key_(derive_seed(seed, index)) {}

  constexpr std::uint64_t operator()() noexcept { return mix64(key_ + 0xd1b54a32d192ed03ULL * ++counter_); }

  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  // Uniform on [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Inverse-cdf draw from a cumulative table (last entry 1).
  std::size_t categorical(std::span<const double> cdf) noexcept;

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace trc
