#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace resunit {

/// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw, SC'11).
///
/// Key = the 64-bit seed split into two 32-bit words. The 128-bit counter is
/// (block_lo, block_hi, stream_lo, stream_hi): each call to the block function
/// yields four 32-bit words and bumps the 64-bit block index. Distinct
/// `stream` values give independent sequences under the same seed.
///
/// Derived draws:
///   uniform()  = (u64 >> 11) * 2^-53, u64 = (w0 << 32) | w1 from consecutive
///                words, so values lie in [0, 1).
///   normal()   = Box-Muller on (1 - uniform(), uniform()), both outputs used
///                in order (cosine branch first).
///   below(n)   = rejection sampling on u64 (Lemire-free, plain modulo reject).
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double std) { return mean + std * normal(); }
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates permutation of 0..n-1 driven by below().
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic seed derivation: folds each part into the base with mix64.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> parts);

/// Bit pattern of a double, for hashing real-valued config into seeds.
std::uint64_t double_bits(double v);

}  // namespace resunit
