#pragma once

#include <array>
#include <cstdint>

namespace fk {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A 128-bit
/// counter and a 64-bit key map to 128 random bits with no hidden state, so
/// any draw can be regenerated from its coordinates alone.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

/// Derives an independent 64-bit stream seed from a base seed and a tag
/// (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Random numbers addressed by (seed, path, step, slot).
///
/// Every value is a pure function of its coordinates, which is what makes
/// ensembles reproducible across thread counts, couples simulations started
/// at different (t, x) through identical Brownian increments, and lets a
/// coarse grid reuse the increments of a finer one.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform in the open interval (0, 1) with 53 random bits.
  double uniform(std::uint64_t path, std::uint64_t step, std::uint32_t slot) const;

  /// Standard normal via Box-Muller; slots 2j and 2j+1 share one Philox block.
  double normal(std::uint64_t path, std::uint64_t step, std::uint32_t slot) const;

  /// Fills out[0..n) with the normals for slots 0..n-1.
  void normals(std::uint64_t path, std::uint64_t step, double* out, std::uint32_t n) const;

 private:
  Philox4x32::Counter block(std::uint64_t path, std::uint64_t step, std::uint32_t block_index) const;

  std::uint64_t seed_;
  Philox4x32::Key key_;
};

}  // namespace fk
