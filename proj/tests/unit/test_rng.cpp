#include <doctest.h>

#include <cmath>
#include <set>

#include "fk/rng.hpp"

using fk::CounterRng;
using fk::Philox4x32;

TEST_SUITE("rng") {
  // Known-answer vectors from the Random123 distribution (kat_vectors).
  TEST_CASE("philox4x32-10 known answers") {
    auto zero = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    CHECK(zero == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    auto ones = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(ones == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    auto pi = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(pi == Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("draws are pure functions of their coordinates") {
    CounterRng a(42), b(42), c(43);
    CHECK(a.normal(7, 3, 1) == b.normal(7, 3, 1));
    CHECK(a.uniform(7, 3, 1) == b.uniform(7, 3, 1));
    CHECK(a.normal(7, 3, 1) != c.normal(7, 3, 1));
    double buf[5];
    a.normals(9, 2, buf, 5);
    for (std::uint32_t j = 0; j < 5; ++j) CHECK(buf[j] == a.normal(9, 2, j));
  }

  TEST_CASE("uniforms stay in the open unit interval") {
    CounterRng r(1);
    for (std::uint64_t p = 0; p < 2000; ++p) {
      const double u = r.uniform(p, p % 7, 0);
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
    }
  }

  TEST_CASE("normal moments") {
    CounterRng r(5);
    const int n = 200000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int p = 0; p < n; ++p) {
      const double z = r.normal(p, 0, 0);
      s1 += z;
      s2 += z * z;
      s4 += z * z * z * z;
    }
    CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
  }

  TEST_CASE("derived seeds separate tags") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t tag = 0; tag < 1000; ++tag) seen.insert(fk::derive_seed(11, tag));
    CHECK(seen.size() == 1000);
    CHECK(fk::derive_seed(11, 3) == fk::derive_seed(11, 3));
  }
}
