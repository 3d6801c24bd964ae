#include "fk/rng.hpp"

#include <cmath>
#include <numbers>

namespace fk {

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline Philox4x32::Counter round(const Philox4x32::Counter& c, const Philox4x32::Key& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mulhilo(kMulA, c[0], lo0, hi0);
  mulhilo(kMulB, c[2], lo1, hi1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

// 53-bit uniform on (0, 1) from two 32-bit words.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) | (lo >> 11);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter counter, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    counter = round(counter, key);
  }
  return counter;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed)
    : seed_(seed), key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

Philox4x32::Counter CounterRng::block(std::uint64_t path, std::uint64_t step, std::uint32_t block_index) const {
  // step occupies two words so fine dyadic grids never wrap the counter
  return Philox4x32::generate({block_index, static_cast<std::uint32_t>(step),
                               static_cast<std::uint32_t>(step >> 32) ^ (static_cast<std::uint32_t>(path >> 32) << 16),
                               static_cast<std::uint32_t>(path)},
                              key_);
}

double CounterRng::uniform(std::uint64_t path, std::uint64_t step, std::uint32_t slot) const {
  const auto b = block(path, step, slot / 2);
  return (slot % 2 == 0) ? to_open_unit(b[0], b[1]) : to_open_unit(b[2], b[3]);
}

double CounterRng::normal(std::uint64_t path, std::uint64_t step, std::uint32_t slot) const {
  const auto b = block(path, step, slot / 2);
  const double u1 = to_open_unit(b[0], b[1]);
  const double u2 = to_open_unit(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return (slot % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
}

void CounterRng::normals(std::uint64_t path, std::uint64_t step, double* out, std::uint32_t n) const {
  for (std::uint32_t j = 0; j < n; j += 2) {
    const auto b = block(path, step, j / 2);
    const double u1 = to_open_unit(b[0], b[1]);
    const double u2 = to_open_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    out[j] = r * std::cos(theta);
    if (j + 1 < n) out[j + 1] = r * std::sin(theta);
  }
}

}  // namespace fk
