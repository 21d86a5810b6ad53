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

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "itasim/common.hpp"
#include "itasim/quant.hpp"

namespace itasim {

/// Integer GeLU: second-order polynomial approximation of erf evaluated
/// on pre-shifted accumulator values, then folded into x*(1+erf)/2 and
/// requantized to 8-bit. The polynomial runs within the 26-bit datapath.
///
/// erf(x) ~ sign(x) * (1 - |a| s'^2 t^2), t = clip - min(|q'|, clip),
/// with a = -0.2888, clip = 1.769/s'. All integer constants below are
/// derived from the input/output scales at parameter-build time.
struct GeluParams {
  int pre_shift = 0;    // q' = q >> pre_shift before the polynomial
  int32_t clip = 0;     // 1.769 in units of the erf-domain scale
  int32_t one_q = 0;    // 1.0 in units of |a|*s'^2
  int gate_shift = 0;   // keeps q' * gate within the multiplier headroom
  QuantParams out;      // requantizes the reduced product to 8-bit

  void check() const {
    if (clip <= 0 || one_q <= 0 || clip > (1 << 12) ||
        int64_t(clip) * clip > one_q || one_q >= (int64_t(1) << 25))
      fail(ErrorKind::shape, "GeLU parameters outside the 26-bit datapath");
  }
};

constexpr double kGeluErfA = 0.2888;   // |a| of the erf quadratic
constexpr double kGeluErfB = 1.769;    // clip point (-b)

/// Derive integer GeLU constants for an accumulator of scale `in_scale`
/// producing 8-bit output of scale `out_scale`.
inline GeluParams make_gelu_params(double in_scale, double out_scale,
                                   Sign out_sign = Sign::i8) {
  if (in_scale <= 0 || out_scale <= 0)
    fail(ErrorKind::shape, "GeLU scales must be positive");
  GeluParams p;
  double sp = 0;
  for (p.pre_shift = 0; p.pre_shift < 40; ++p.pre_shift) {
    sp = in_scale * double(int64_t(1) << p.pre_shift) / std::sqrt(2.0);
    if (int64_t(kGeluErfB / sp) < (1 << 12)) break;
  }
  p.clip = int32_t(kGeluErfB / sp);
  p.one_q = int32_t(std::llround(1.0 / (kGeluErfA * sp * sp)));
  // q' * (one_q + E) spans up to 51 - pre_shift bits; reduce it so the
  // final 31-bit multiplier cannot overflow 64-bit arithmetic.
  p.gate_shift = std::max(0, 20 - p.pre_shift);
  const double ratio = 0.5 * in_scale *
                       double(int64_t(1) << (p.pre_shift + p.gate_shift)) /
                       (double(p.one_q) * out_scale);
  p.out = make_requant(ratio, out_sign);
  p.check();
  return p;
}

inline int i_gelu(int64_t acc, const GeluParams& p) {
  const int64_t q = rshift_round(acc, p.pre_shift);
  const int64_t sgn = q > 0 ? 1 : (q < 0 ? -1 : 0);
  int64_t qa = q < 0 ? -q : q;
  if (qa > p.clip) qa = p.clip;
  const int64_t t = p.clip - qa;
  const int64_t erf_q = p.one_q - t * t;  // in [0, one_q]
  return requantize(rshift_round(q * (p.one_q + sgn * erf_q), p.gate_shift),
                    p.out);
}

}  // namespace itasim
