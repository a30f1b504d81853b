#pragma once

#include <cstdint>
#include <limits>

namespace streamlearn {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stable key derivation: hash(master, index). Used for trial seeds and for
/// the per-sample generator state, so it must never change between versions.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index ^ 0xD1B54A32D192ED03ULL));
}

/// Independent random domains drawn from one master seed.
enum class RngDomain : std::uint64_t {
  samples = 1,
  ground_truth = 2,
  initial_point = 3,
  holdout = 4,
  topology = 5,
  estimation = 6,
};

/// Counter-based generator: the state for draw `counter` under `key` is a
/// pure function of the pair, so sample t' never depends on who consumed
/// samples before it. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t key, std::uint64_t counter) noexcept
      : state_(derive_seed(key, counter)) {}
  CounterRng(std::uint64_t seed, RngDomain domain, std::uint64_t counter) noexcept
      : CounterRng(derive_seed(seed, static_cast<std::uint64_t>(domain)), counter) {}

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t state_;
};

}  // namespace streamlearn
