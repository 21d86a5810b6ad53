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

#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "itasim/common.hpp"

namespace itasim {

// Base-2 integer exponential. iexp_q15(d) approximates 2^(-d / 2^F) in
// Q15 for a non-negative scaled difference d. The fractional part indexes
// a 2^F-entry LUT; the integer part is a right shift.
constexpr int kExpFracBits = 5;
constexpr int32_t kExpOne = 1 << 15;

// round(32768 * 2^(-r/32)) for r in [0, 32)
constexpr uint16_t kExpLut[1 << kExpFracBits] = {
    32768, 32066, 31379, 30706, 30048, 29405, 28774, 28158,
    27554, 26964, 26386, 25821, 25268, 24726, 24196, 23678,
    23170, 22674, 22188, 21713, 21247, 20792, 20347, 19911,
    19484, 19066, 18658, 18258, 17867, 17484, 17109, 16743,
};

inline int32_t iexp_q15(int64_t d) {
  if (d < 0) fail(ErrorKind::shape, "iexp difference must be non-negative");
  const int64_t q = d >> kExpFracBits;
  if (q >= 16) return 0;
  return kExpLut[d & ((1 << kExpFracBits) - 1)] >> q;
}

/// Fixed-point reciprocal: returns round(2^30 / denom) in Q15 when denom
/// is Q15 (so 1.0 maps to 1.0). Integer Newton-Raphson from a shift-based
/// seed y0 = 3 - 2v on the normalized mantissa; three iterations keep the
/// result within 1 ULP of the real reciprocal over the full denominator
/// range (verified by sweep in the tests).
inline int32_t fixed_reciprocal_q15(uint32_t denom) {
  if (denom == 0) fail(ErrorKind::overflow, "reciprocal of zero denominator");
  int e = 0;
  for (uint32_t t = denom; t != 0; t >>= 1) ++e;  // bit width
  // v in [2^15, 2^16) is the Q16 mantissa of denom = v * 2^(e-16).
  int64_t v = e <= 16 ? int64_t(denom) << (16 - e)
                      : rshift_round(int64_t(denom), e - 16);
  if (v > 0xffff) v = 0xffff;
  int64_t y = (int64_t(3) << 30) - (v << 15);  // Q30 seed for 1/v
  for (int i = 0; i < 3; ++i) {
    const int64_t t = rshift_round(v * y, 16);            // v*y in Q30
    y = rshift_round(y * ((int64_t(2) << 30) - t), 30);   // y*(2 - v*y)
  }
  return int32_t(rshift_round(y, e));
}

struct ItaMaxConfig {
  // Multiplier taking a raw 8-bit logit difference into the exponent
  // domain: one input LSB weighs 2^(-exp_scale/32) in the softmax.
  int exp_scale = 8;
  // Rows tracked concurrently by one engine instance (hardware buffer
  // depth, one per dot unit).
  int row_group = 16;
};

/// Three-stage streaming integer softmax over a group of rows.
///
/// DA  absorbs 8-bit values chunk by chunk, tracking a reference anchor
///     that always sits at or above the running maximum. The anchor only
///     moves in multiples of 32/gcd(exp_scale,32) input LSBs, so the
///     denominator renormalization on a maximum update is a pure right
///     shift. Absorption is element-sequential: any chunk partition of a
///     row yields bit-identical state.
/// DI  inverts the accumulated denominator (fixed-point reciprocal).
/// EN  normalizes stored values into u8 attention weights (scale 1/255).
class ItaMax {
 public:
  enum class Phase : uint8_t { DA, DI, EN };

  explicit ItaMax(int rows, ItaMaxConfig cfg = {}) : cfg_(cfg), rows_(rows) {
    if (rows <= 0) fail(ErrorKind::shape, "ItaMax needs at least one row");
    state_.resize(size_t(rows));
    const int g = std::gcd(cfg_.exp_scale, 32);
    anchor_step_ = 32 / g;
    shift_per_step_ = cfg_.exp_scale / g;
  }

  int rows() const { return rows_; }
  Phase phase() const { return phase_; }

  void absorb(int row, std::span<const int8_t> chunk) {
    if (phase_ != Phase::DA)
      fail(ErrorKind::validation, "ItaMax absorb after denominator inversion");
    RowState& st = at(row);
    for (int8_t x8 : chunk) {
      const int x = x8;
      if (!st.seeded) {
        st.seeded = true;
        st.ref = st.max = int16_t(x);
        st.denom = uint32_t(kExpOne);
        continue;
      }
      if (x > st.max) st.max = int16_t(x);
      if (x > st.ref) {
        const int64_t steps = ceil_div(x - st.ref, anchor_step_);
        st.ref = int16_t(st.ref + steps * anchor_step_);
        const int64_t s = steps * shift_per_step_;
        st.denom = s < 32 ? st.denom >> s : 0;
      }
      st.denom += uint32_t(iexp_q15(int64_t(st.ref - x) * cfg_.exp_scale));
    }
  }

  /// DI stage: invert every row's denominator. All rows must have
  /// absorbed at least one value.
  void finalize() {
    if (phase_ != Phase::DA)
      fail(ErrorKind::validation, "ItaMax finalize called twice");
    for (int r = 0; r < rows_; ++r) {
      RowState& st = state_[size_t(r)];
      if (!st.seeded || st.denom == 0)
        fail(ErrorKind::overflow,
             "ItaMax finalize with empty row " + std::to_string(r));
      st.inv = fixed_reciprocal_q15(st.denom);
    }
    phase_ = Phase::DI;
  }

  /// EN stage: normalized u8 attention weight for a value previously
  /// absorbed into `row`.
  uint8_t normalize(int row, int8_t x) {
    if (phase_ == Phase::DA)
      fail(ErrorKind::validation, "ItaMax normalize before finalize");
    phase_ = Phase::EN;
    const RowState& st = at(row);
    if (x > st.ref)
      fail(ErrorKind::validation, "ItaMax normalize of a value never absorbed");
    const int64_t e = iexp_q15(int64_t(st.ref - x) * cfg_.exp_scale);
    const int64_t prod = e * st.inv;  // Q30 probability
    const int64_t a = (prod * 255 + (int64_t(1) << 29)) >> 30;
    return a > 255 ? uint8_t(255) : uint8_t(a);
  }

  // State observers (used by tests and the DI/EN plumbing).
  int running_max(int row) const { return at(row).max; }
  int reference(int row) const { return at(row).ref; }
  uint32_t running_denom(int row) const { return at(row).denom; }
  int32_t inv_denom(int row) const { return at(row).inv; }

 private:
  struct RowState {
    bool seeded = false;
    int16_t max = 0;
    int16_t ref = 0;  // anchor; ref >= max, ref - max < anchor step
    uint32_t denom = 0;
    int32_t inv = 0;
  };

  RowState& at(int row) {
    if (row < 0 || row >= rows_)
      fail(ErrorKind::shape, "ItaMax row out of range");
    return state_[size_t(row)];
  }
  const RowState& at(int row) const {
    return const_cast<ItaMax*>(this)->at(row);
  }

  ItaMaxConfig cfg_;
  int rows_;
  int anchor_step_;
  int shift_per_step_;
  Phase phase_ = Phase::DA;
  std::vector<RowState> state_;
};

}  // namespace itasim
