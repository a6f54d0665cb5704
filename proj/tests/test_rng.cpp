#include <cmath>
#include <set>

#include "doctest.h"
#include "resunit/rng.hpp"

using namespace resunit;

TEST_SUITE("rng") {
  TEST_CASE("Philox4x32-10 known-answer vectors") {
    using W = std::array<std::uint32_t, 4>;
    CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("same seed and stream reproduce the sequence") {
    Philox a(42, 3), b(42, 3), c(42, 4);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      const std::uint32_t x = a.next_u32();
      CHECK(x == b.next_u32());
      differs |= x != c.next_u32();
    }
    CHECK(differs);
  }

  TEST_CASE("uniform draws lie in [0, 1) with the right moments") {
    Philox rng(7);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      sq += u * u;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sq / n - mean * mean - 1.0 / 12.0) < 2e-3);
  }

  TEST_CASE("normal draws have zero mean and unit variance") {
    Philox rng(8);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 0.02);
  }

  TEST_CASE("below and permutation") {
    Philox rng(9);
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7u);
    const auto p = rng.permutation(50);
    CHECK(std::set<std::size_t>(p.begin(), p.end()).size() == 50);
  }

  TEST_CASE("derive_seed separates its parts") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    CHECK(double_bits(0.1) != double_bits(0.2));
  }
}
