#pragma once

#include <cstdint>
#include <span>

namespace ergolab {

// SplitMix64 finalizer. A bijection on 64-bit words with full avalanche.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

// Maps the top 53 bits to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Hash of a signed coordinate tuple under a seed. The selector fields are
// keyed by this value, so draws do not depend on enumeration order.
constexpr std::uint64_t key_coordinates(std::uint64_t seed,
                                        std::span<const std::int64_t> coords) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0xD1B54A32D192ED03ULL);
  for (std::int64_t c : coords) h = mix_key(h, static_cast<std::uint64_t>(c));
  return h;
}

// Derives an independent seed for sub-experiment `index` (trial, worker,
// corpus member) of the experiment seeded by `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix_key(splitmix64(seed) ^ 0xA0761D6478BD642FULL, index);
}

// Counter-based stream: the n-th draw is a pure function of (key, n).
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return mix_key(key_, counter_++); }

  constexpr double uniform() noexcept { return to_unit((*this)()); }

  // Uniform integer in [0, n) by rejection, n > 0.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % n;
  }

  constexpr std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ergolab
