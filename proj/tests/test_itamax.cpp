/**
 * Copyright (c) the itasim authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "itasim/itamax.hpp"
#include "oracles.hpp"

using namespace itasim;

namespace {

std::vector<int8_t> random_row(std::mt19937& rng, size_t n) {
  std::uniform_int_distribution<int> d(-128, 127);
  std::vector<int8_t> row(n);
  for (auto& v : row) v = int8_t(d(rng));
  return row;
}

ItaMax absorb_whole(const std::vector<int8_t>& row, ItaMaxConfig cfg = {}) {
  ItaMax m(1, cfg);
  m.absorb(0, row);
  return m;
}

}  // namespace

TEST_CASE("iexp fixed-point exponential", "[itamax]") {
  CHECK(iexp_q15(0) == kExpOne);        // 1.0
  CHECK(iexp_q15(32) == kExpOne / 2);   // exponent exactly 1 -> pure shift
  CHECK(iexp_q15(64) == kExpOne / 4);
  CHECK(iexp_q15(10000) == 0);
  CHECK_THROWS_AS(iexp_q15(-1), Error);

  SECTION("sweep vs the real exponential, and monotonicity") {
    double worst = 0.0;
    int32_t prev = kExpOne + 1;
    for (int d = 0; d <= 255; ++d) {
      const int32_t got = iexp_q15(d);
      const double exact = std::exp2(-d / 32.0) * kExpOne;
      worst = std::max(worst, std::abs(got - exact) / exact);
      CHECK(got <= prev);
      prev = got;
    }
    CHECK(worst <= 0.03);
    for (int d = 256; d < 4096; ++d) {
      const int32_t got = iexp_q15(d);
      CHECK(got <= prev);
      prev = got;
    }
  }
}

TEST_CASE("fixed-point reciprocal within 1 ULP over the full range",
          "[itamax]") {
  CHECK(fixed_reciprocal_q15(uint32_t(kExpOne)) == kExpOne);      // 1/1.0
  CHECK(fixed_reciprocal_q15(uint32_t(2 * kExpOne)) == kExpOne / 2);
  CHECK_THROWS_AS(fixed_reciprocal_q15(0), Error);

  // Dense at the low end where ULP error is largest, strided above.
  double worst = 0.0;
  const auto probe = [&](uint32_t denom) {
    const double exact = double(int64_t(1) << 30) / denom;
    worst = std::max(worst, std::abs(fixed_reciprocal_q15(denom) - exact));
  };
  for (uint32_t d = 1 << 14; d < (1u << 18); ++d) probe(d);
  std::mt19937 rng(5);
  std::uniform_int_distribution<uint32_t> ds(1u << 18, 1u << 24);
  for (int t = 0; t < 200000; ++t) probe(ds(rng));
  CHECK(worst <= 1.0);
}

TEST_CASE("uniform rows", "[itamax]") {
  for (int v : {-128, -5, 0, 13, 127}) {
    for (size_t len : {1, 4, 64, 128}) {
      ItaMax m(1);
      m.absorb(0, std::vector<int8_t>(len, int8_t(v)));
      CHECK(m.running_max(0) == v);
      CHECK(m.running_denom(0) == uint32_t(len) * uint32_t(kExpOne));
      m.finalize();
      const int expect = int(std::lround(255.0 / double(len)));
      for (size_t i = 0; i < len; ++i)
        CHECK(m.normalize(0, int8_t(v)) == expect);
    }
  }
}

TEST_CASE("chunk partition invariance is bit-exact", "[itamax]") {
  SECTION("the spec'd two-chunk case") {
    ItaMax two(1);
    two.absorb(0, std::vector<int8_t>{5, 3});
    two.absorb(0, std::vector<int8_t>{7});
    ItaMax one = absorb_whole({5, 3, 7});
    CHECK(two.running_max(0) == one.running_max(0));
    CHECK(two.running_denom(0) == one.running_denom(0));
  }

  SECTION("500 seeded rows, random partitions") {
    std::mt19937 rng(99);
    for (int t = 0; t < 500; ++t) {
      std::uniform_int_distribution<size_t> lens(1, 300);
      const auto row = random_row(rng, lens(rng));
      ItaMax whole = absorb_whole(row);
      ItaMax parts(1);
      size_t pos = 0;
      while (pos < row.size()) {
        std::uniform_int_distribution<size_t> cut(1, row.size() - pos);
        const size_t n = cut(rng);
        parts.absorb(0, std::span<const int8_t>(row.data() + pos, n));
        pos += n;
      }
      CAPTURE(t, row.size());
      REQUIRE(parts.running_max(0) == whole.running_max(0));
      REQUIRE(parts.running_denom(0) == whole.running_denom(0));
      REQUIRE(parts.reference(0) == whole.reference(0));
    }
  }
}

TEST_CASE("one-hot row puts full mass on the hot index", "[itamax]") {
  std::vector<int8_t> row(64, int8_t(-128));
  row[41] = 127;
  ItaMax m = absorb_whole(row);
  m.finalize();
  for (size_t i = 0; i < row.size(); ++i) {
    const int a = m.normalize(0, row[i]);
    if (i == 41)
      CHECK(a == 255);
    else
      CHECK(a == 0);
  }
}

TEST_CASE("finalize inverts the denominator", "[itamax]") {
  SECTION("max-first row keeps the anchor at the maximum") {
    ItaMax m = absorb_whole({100, 20, -40});
    CHECK(m.reference(0) == 100);
    m.finalize();
    // The largest weight is iexp(0) * inv_denom.
    const int64_t prod = int64_t(iexp_q15(0)) * m.inv_denom(0);
    const int expect = int((prod * 255 + (int64_t(1) << 29)) >> 30);
    CHECK(m.normalize(0, 100) == expect);
  }
  SECTION("error paths") {
    ItaMax m(1);
    CHECK_THROWS_AS(m.normalize(0, 0), Error);    // EN before DI
    CHECK_THROWS_AS(m.finalize(), Error);         // empty row
    m.absorb(0, std::vector<int8_t>{1});
    m.finalize();
    CHECK_THROWS_AS(m.finalize(), Error);         // DI twice
    CHECK_THROWS_AS(m.absorb(0, std::vector<int8_t>{1}), Error);  // DA after DI
    CHECK(m.phase() == ItaMax::Phase::DI);
    CHECK(m.normalize(0, 1) == 255);
    CHECK(m.phase() == ItaMax::Phase::EN);
  }
}

TEST_CASE("normalized rows track the real softmax", "[itamax]") {
  std::mt19937 rng(2024);
  const ItaMaxConfig cfg;
  double worst_mean = 0.0;
  for (int t = 0; t < 300; ++t) {
    const size_t len = size_t(64) << (t % 3);  // 64, 128, 256
    const auto row = random_row(rng, len);
    ItaMax m = absorb_whole(row, cfg);
    m.finalize();

    std::vector<int> as_int(row.begin(), row.end());
    const auto p = oracle::softmax_row(as_int, cfg.exp_scale);

    int64_t mass = 0;
    double err = 0.0;
    int a_hot = -1, a_max = 0;
    const int hot = int(std::max_element(as_int.begin(), as_int.end()) -
                        as_int.begin());
    for (size_t i = 0; i < len; ++i) {
      const int a = m.normalize(0, row[i]);
      mass += a;
      err += std::abs(a / 255.0 - p[i]);
      if (int(i) == hot) a_hot = a;
      a_max = std::max(a_max, a);
    }
    worst_mean = std::max(worst_mean, err / double(len));
    CHECK(mass >= 255 - int64_t(len));
    CHECK(mass <= 255 + int64_t(len));
    // Argmax preservation whenever the input max is unique by >= 2 LSB.
    const int second = [&] {
      int s = -1000;
      for (size_t i = 0; i < len; ++i)
        if (int(i) != hot) s = std::max(s, as_int[i]);
      return s;
    }();
    if (as_int[size_t(hot)] >= second + 2) CHECK(a_hot == a_max);
  }
  CHECK(worst_mean <= 2.0 / 255.0);
}
