#pragma once

// Counter-based random substreams.
//
// Stream (seed, index) is a pure function of its two keys: the k-th output is
// mix64(base + k * golden) with base derived from (seed, index). Work items
// that own distinct indices can therefore be evaluated in any order or on any
// thread and still draw exactly the same numbers.

#include <cstdint>
#include <limits>

namespace qnd {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : base_(mix64(seed ^ mix64(stream + kGolden))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(base_ + (++counter_) * kGolden); }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

/// Seed for the index-th child of a sweep or bootstrap. The outer mix keeps
/// nested derivations from commuting.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace qnd
