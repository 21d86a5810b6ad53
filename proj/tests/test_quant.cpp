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

#include <cstdio>
#include <random>

#include "itasim/quant.hpp"
#include "itasim/tensor_io.hpp"
#include "oracles.hpp"

using namespace itasim;

TEST_CASE("requantize basics", "[quant]") {
  QuantParams p;  // multiplier 1, shift 0, signed out
  CHECK(requantize(0, p) == 0);
  CHECK(requantize((int64_t(1) << 25) - 1, p) == 127);  // saturation ceiling
  CHECK(requantize(-(int64_t(1) << 25), p) == -128);

  p.multiplier = 3;
  p.shift = 5;
  CHECK(requantize(1000, p) == 94);  // round(3000/32) = 94
  CHECK(requantize(-1000, p) == -94);

  p.out_sign = Sign::u8;
  CHECK(requantize(-1000, p) == 0);
  CHECK(requantize(8000, p) == 255);
}

TEST_CASE("requantize matches the real-valued oracle on a small grid",
          "[quant]") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int64_t> accs(-(int64_t(1) << 25),
                                              (int64_t(1) << 25) - 1);
  for (int64_t mult = 0; mult <= 7; ++mult) {
    for (int shift = 0; shift <= 6; ++shift) {
      QuantParams p{mult, shift, Rounding::half_away_from_zero, Sign::i8};
      for (int t = 0; t < 200; ++t) {
        const int64_t acc = accs(rng);
        CAPTURE(acc, mult, shift);
        CHECK(requantize(acc, p) == oracle::requant_real(acc, mult, shift, true));
      }
    }
  }
}

TEST_CASE("requantize is monotone in the accumulator", "[quant]") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int64_t> accs(-(int64_t(1) << 25),
                                              (int64_t(1) << 25) - 2);
  std::uniform_int_distribution<int64_t> mults(0, (int64_t(1) << 20));
  std::uniform_int_distribution<int> shifts(0, 30);
  for (int t = 0; t < 5000; ++t) {
    QuantParams p{mults(rng), shifts(rng), Rounding::half_away_from_zero,
                  t % 2 ? Sign::i8 : Sign::u8};
    int64_t a = accs(rng), b = accs(rng);
    if (a > b) std::swap(a, b);
    CAPTURE(a, b, p.multiplier, p.shift);
    CHECK(requantize(a, p) <= requantize(b, p));
  }
}

TEST_CASE("quantize/dequantize bridge", "[quant]") {
  CHECK(quantize_real(0.0, 0.1) == 0);
  CHECK(quantize_real(12.7, 0.1) == 127);
  CHECK(quantize_real(99.0, 0.1) == 127);   // saturates
  CHECK(quantize_real(-0.05, 0.1) == -1);   // half away from zero
  CHECK(dequantize(-1, 0.1) == Catch::Approx(-0.1));
  CHECK_THROWS_AS(quantize_real(1.0, 0.0), Error);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> xs(-12.0, 12.0);
  for (int t = 0; t < 2000; ++t) {
    const double scale = 0.1, x = xs(rng);
    const double back = dequantize(quantize_real(x, scale), scale);
    CHECK(std::abs(back - x) <= scale / 2 + 1e-12);
  }
}

TEST_CASE("saturating_mac", "[quant]") {
  CHECK(saturating_mac(0, 0, 77) == 0);
  CHECK(saturating_mac(5, 2, -3) == -1);
  CHECK_THROWS_AS(saturating_mac((int64_t(1) << 25) - 1, 127, 127), Error);

  // Worst-case 64-element dot product of extremes plus a max 24-bit bias
  // stays inside 26 signed bits.
  int64_t acc = (int64_t(1) << 23) - 1;
  for (int k = 0; k < 64; ++k) acc = saturating_mac(acc, -128, -128);
  CHECK(acc == 64 * 16384 + (int64_t(1) << 23) - 1);
  CHECK(acc < (int64_t(1) << 25));

  // Exhaustive extreme-vector trials: every +-128/127 pairing.
  for (int a : {-128, 127}) {
    for (int w : {-128, 127}) {
      for (int64_t bias : {-(int64_t(1) << 23), (int64_t(1) << 23) - 1}) {
        int64_t v = bias;
        for (int k = 0; k < 64; ++k) v = saturating_mac(v, a, w);
        CHECK(v >= -(int64_t(1) << 25));
        CHECK(v <= (int64_t(1) << 25) - 1);
      }
    }
  }
}

TEST_CASE("tensor container round trip with all dtypes", "[quant][io]") {
  std::mt19937 rng(11);
  TensorContainer c;
  QTensor a = oracle::random_q(rng, {4, 6}, 0.05);
  QTensor b = oracle::random_q(rng, {3, 3}, 1.0 / 255.0, Sign::u8);
  std::vector<int32_t> bias = {-(1 << 23), (1 << 23) - 1, 0, 12345, -9876};
  std::vector<int32_t> wide = {INT32_MIN, INT32_MAX, 0, -1, 77};
  c.add_q("a", a);
  c.add_q("b", b);
  c.add_i24("bias", bias, {int64_t(bias.size())});
  c.add_i32("wide", wide, {int64_t(wide.size())});

  const std::string prefix = std::string(std::tmpnam(nullptr)) + "_itasim";
  c.save(prefix);
  TensorContainer d = TensorContainer::load(prefix + ".bin");
  CHECK(d.get_q("a") == a);
  CHECK(d.get_q("b") == b);
  CHECK(d.get_i32("bias") == bias);
  CHECK(d.get_i32("wide") == wide);
  CHECK(d.get_q("a").scale == a.scale);

  SECTION("truncated blob is a container error") {
    TensorContainer::write_file(
        prefix + ".bin", TensorContainer::read_file(prefix + ".bin").substr(0, 8));
    CHECK_THROWS_AS(TensorContainer::load(prefix), Error);
  }
  std::remove((prefix + ".json").c_str());
  std::remove((prefix + ".bin").c_str());
}

TEST_CASE("24-bit values outside range are rejected", "[quant][io]") {
  TensorContainer c;
  CHECK_THROWS_AS(c.add_i24("bad", {1 << 23}, {1}), Error);
}
