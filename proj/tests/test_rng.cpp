#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "ccf/rng.hpp"

using namespace ccf::rng;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors from the Random123 distribution.
  SUBCASE("zero counter, zero key") {
    const Counter out = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  SUBCASE("all-ones counter and key") {
    const Counter out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  SUBCASE("pi digits") {
    const Counter out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("streams are pure functions of key and stream id") {
  CounterStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    differs_c = differs_c || va != c();
    differs_d = differs_d || va != d();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("derive_key is order sensitive") {
  CHECK(derive_key({1, 2, 3}) == derive_key({1, 2, 3}));
  CHECK(derive_key({1, 2, 3}) != derive_key({3, 2, 1}));
  CHECK(derive_key({1, 2}) != derive_key({1, 2, 0}));
}

TEST_CASE("uniform, exponential and below") {
  CounterStream s(2024, 0);
  const int n = 200000;
  double su = 0, se = 0, se2 = 0;
  std::size_t counts[5] = {};
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double e = s.exponential();
    REQUIRE(e >= 0.0);
    se += e;
    se2 += e * e;
    const auto k = s.below(5);
    REQUIRE(k < 5);
    ++counts[k];
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(se / n - 1.0) < 4 * std::sqrt(1.0 / n));
  CHECK(std::abs(se2 / n - 2.0) < 4 * std::sqrt(20.0 / n));
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / n - 0.2) < 4 * std::sqrt(0.16 / n));

  CounterStream t(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double v = t.uniform(0.5, 1.0);
    CHECK(v >= 0.5);
    CHECK(v < 1.0);
  }
}
