#pragma once

// Reproducible randomness.
//
// All random draws in lrmr come from Philox4x32-10 (Salmon et al., "Parallel
// random numbers: as easy as 1, 2, 3"), a counter-based generator: the value
// at counter c under key k is a pure function of (k, c). Streams are keyed by
// 64-bit seeds mixed with SplitMix64, so an operator row, a trial or a probe
// can be regenerated independently of every other draw and of thread count.
//
// Normals use the Box-Muller transform on one 128-bit block per pair. Values
// are bit-reproducible on IEEE-754 platforms whose libm log/sin/cos agree.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace lrmr {

/// One Philox4x32-10 block.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Order-sensitive hash of a seed and a list of stream tags.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);

/// Random access view of one stream.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key);

  /// Two 64-bit words from block `index`.
  std::array<std::uint64_t, 2> block(std::uint64_t index) const;
  /// Uniform in the open interval (0, 1); consumes the first word of block `index`.
  double uniform(std::uint64_t index) const;
  /// Standard normal number `index`; normals 2k and 2k+1 share block k.
  double normal(std::uint64_t index) const;
  /// +1 or -1 with equal probability, one bit per index.
  double sign(std::uint64_t index) const;

 private:
  std::array<std::uint32_t, 2> key_;
};

/// Sequential generator over a CounterStream. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : stream_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  double uniform();
  double normal();
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  CounterStream stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lrmr
