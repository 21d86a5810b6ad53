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
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "itasim/common.hpp"

namespace itasim {

enum class Sign : uint8_t { i8, u8 };

inline int sign_min(Sign s) { return s == Sign::i8 ? -128 : 0; }
inline int sign_max(Sign s) { return s == Sign::i8 ? 127 : 255; }

/// 8-bit quantized tensor, row-major. Storage is raw bytes; `sign`
/// selects the decoding. Zero-points are fixed at 0 (symmetric).
struct QTensor {
  std::vector<int64_t> shape;
  std::vector<int8_t> data;
  double scale = 1.0;
  Sign sign = Sign::i8;

  int64_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), int64_t{1},
                           [](int64_t a, int64_t b) { return a * b; });
  }
  // 2D accessors; most kernels operate on matrices.
  int64_t rows() const { return shape.size() == 2 ? shape[0] : numel() / cols(); }
  int64_t cols() const { return shape.empty() ? 0 : shape.back(); }

  int element(int64_t i) const {
    return sign == Sign::i8 ? int(data[size_t(i)])
                            : int(uint8_t(data[size_t(i)]));
  }
  int at(int64_t r, int64_t c) const { return element(r * cols() + c); }

  void set(int64_t i, int v) {
    if (v < sign_min(sign) || v > sign_max(sign))
      fail(ErrorKind::shape, "QTensor value " + std::to_string(v) +
                                 " outside declared range");
    data[size_t(i)] = int8_t(v);
  }

  static QTensor zeros(std::vector<int64_t> shape, double scale = 1.0,
                       Sign sign = Sign::i8) {
    QTensor t;
    t.shape = std::move(shape);
    t.scale = scale;
    t.sign = sign;
    t.data.assign(size_t(t.numel()), 0);
    return t;
  }

  void check() const {
    if (int64_t(data.size()) != numel())
      fail(ErrorKind::shape, "QTensor data length does not match shape");
    if (scale <= 0.0) fail(ErrorKind::shape, "QTensor scale must be positive");
  }

  bool operator==(const QTensor& o) const {
    return shape == o.shape && data == o.data && sign == o.sign;
  }
};

/// Wide accumulator tensor. Values are carried in int64 but semantically
/// bounded to `acc_bits` signed bits; exceeding the bound is a fault.
struct AccTensor {
  std::vector<int64_t> shape;
  std::vector<int64_t> data;
  int acc_bits = 26;

  int64_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), int64_t{1},
                           [](int64_t a, int64_t b) { return a * b; });
  }
  int64_t min() const { return -(int64_t(1) << (acc_bits - 1)); }
  int64_t max() const { return (int64_t(1) << (acc_bits - 1)) - 1; }

  void check() const {
    for (size_t i = 0; i < data.size(); ++i)
      if (data[i] < min() || data[i] > max())
        fail(ErrorKind::overflow,
             "accumulator overflow at index " + std::to_string(i));
  }
};

enum class Rounding : uint8_t { half_away_from_zero, truncate };

/// Fixed-point requantization: multiply, shift right, round, saturate.
struct QuantParams {
  int64_t multiplier = 1;  // non-negative, < 2^31
  int shift = 0;           // right shift, >= 0
  Rounding rounding = Rounding::half_away_from_zero;
  Sign out_sign = Sign::i8;

  void check() const {
    if (multiplier < 0 || multiplier >= (int64_t(1) << 31))
      fail(ErrorKind::shape, "requant multiplier out of range");
    if (shift < 0 || shift > 62) fail(ErrorKind::shape, "requant shift out of range");
  }
};

inline int requantize(int64_t acc, const QuantParams& p) {
  int64_t v = acc * p.multiplier;
  v = p.rounding == Rounding::half_away_from_zero
          ? rshift_round(v, p.shift)
          : (p.shift >= 63 ? 0 : v >> p.shift);
  const int lo = sign_min(p.out_sign), hi = sign_max(p.out_sign);
  if (v < lo) return lo;
  if (v > hi) return hi;
  return int(v);
}

/// Encode a real-valued rescale ratio as (multiplier, shift).
inline QuantParams make_requant(double ratio, Sign out_sign = Sign::i8) {
  if (ratio <= 0.0) fail(ErrorKind::shape, "requant ratio must be positive");
  QuantParams p;
  p.out_sign = out_sign;
  int e = 0;
  const double m = std::frexp(ratio, &e);  // ratio = m * 2^e, m in [0.5, 1)
  p.multiplier = int64_t(std::llround(m * double(int64_t(1) << 30)));
  p.shift = 30 - e;
  if (p.shift < 0) {  // ratio >= 2^30: widen the multiplier instead
    p.multiplier <<= -p.shift;
    p.shift = 0;
  }
  p.check();
  return p;
}

inline int quantize_real(double x, double scale, Sign sign = Sign::i8) {
  if (scale <= 0.0) fail(ErrorKind::shape, "quantize scale must be positive");
  const long long q = std::llround(x / scale);  // half away from zero
  const int lo = sign_min(sign), hi = sign_max(sign);
  return q < lo ? lo : (q > hi ? hi : int(q));
}

inline double dequantize(int q, double scale) { return double(q) * scale; }

/// One multiply-accumulate step at `acc_bits` precision. Faults on
/// overflow instead of wrapping.
inline int64_t saturating_mac(int64_t acc, int a, int w, int acc_bits = 26) {
  const int64_t lim = int64_t(1) << (acc_bits - 1);
  const int64_t next = acc + int64_t(a) * int64_t(w);
  if (next < -lim || next > lim - 1)
    fail(ErrorKind::overflow, "mac overflow: acc=" + std::to_string(acc) +
                                  " a=" + std::to_string(a) +
                                  " w=" + std::to_string(w));
  return next;
}

constexpr int kBiasBits = 24;  // ITA bias port width
inline void check_bias(int64_t b) {
  const int64_t lim = int64_t(1) << (kBiasBits - 1);
  if (b < -lim || b > lim - 1)
    fail(ErrorKind::shape, "bias value exceeds 24-bit range: " + std::to_string(b));
}

}  // namespace itasim
