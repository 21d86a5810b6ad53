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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "itasim/common.hpp"
#include "itasim/gelu.hpp"
#include "itasim/itamax.hpp"
#include "itasim/quant.hpp"

namespace itasim {

/// Accelerator geometry: N dot product units of vector length M with a
/// D-bit accumulator, matrices up to max_dim per side.
struct ItaConfig {
  int n_units = 16;
  int vec_len = 64;
  int acc_bits = 26;
  int max_dim = 512;

  int64_t peak_ops_per_cycle() const {
    return int64_t(2) * n_units * vec_len;  // 1 MAC = 2 Op
  }
  /// Compute cycles for one vec_len x vec_len output tile per K chunk.
  int64_t tile_chunk_cycles() const {
    return int64_t(vec_len) * vec_len / n_units;
  }

  void check_dim(int64_t d, const std::string& what) const {
    if (d <= 0 || d % vec_len != 0 || d > max_dim)
      fail(ErrorKind::shape,
           what + "=" + std::to_string(d) + " must be a positive multiple of " +
               std::to_string(vec_len) + " and at most " +
               std::to_string(max_dim));
  }
};

enum class Act : uint8_t { identity, relu, gelu };

inline const char* act_name(Act a) {
  switch (a) {
    case Act::identity: return "identity";
    case Act::relu: return "relu";
    case Act::gelu: return "gelu";
  }
  return "?";
}

inline Act act_from_name(const std::string& s) {
  if (s == "identity") return Act::identity;
  if (s == "relu") return Act::relu;
  if (s == "gelu") return Act::gelu;
  fail(ErrorKind::schema, "unknown activation: " + s);
}

struct ActMode {
  Act tag = Act::identity;
  GeluParams gelu;  // used only when tag == gelu (owns its requantizer)
};

/// Shared accumulate/activate/requantize epilogue so the ITA and cluster
/// models produce identical values on shared shapes.
inline int activate_requantize(int64_t acc, const ActMode& act,
                               const QuantParams& p) {
  switch (act.tag) {
    case Act::identity: return requantize(acc, p);
    case Act::relu: return requantize(acc < 0 ? 0 : acc, p);
    case Act::gelu: return i_gelu(acc, act.gelu);
  }
  return 0;
}

/// out[r][c] = requantize(act(sum_k x[r][k] * w[k][c] + bias[c])).
/// Bit-exact by construction: plain integer sums with a D-bit range
/// fault, no hidden state. `transpose_w` reads w as [C x K] (the
/// streamer's transposed access pattern for Q*K^T).
inline QTensor ita_gemm(const QTensor& x, const QTensor& w,
                        std::span<const int32_t> bias, const ActMode& act,
                        const QuantParams& p, const ItaConfig& cfg = {},
                        double out_scale = 1.0, bool transpose_w = false) {
  const int64_t r_dim = x.rows(), k_dim = x.cols();
  const int64_t c_dim = transpose_w ? w.rows() : w.cols();
  const int64_t wk = transpose_w ? w.cols() : w.rows();
  cfg.check_dim(r_dim, "rows");
  cfg.check_dim(k_dim, "inner");
  cfg.check_dim(c_dim, "cols");
  if (wk != k_dim)
    fail(ErrorKind::shape, "gemm inner dimensions disagree: " +
                               std::to_string(k_dim) + " vs " +
                               std::to_string(wk));
  if (!bias.empty() && int64_t(bias.size()) != c_dim)
    fail(ErrorKind::shape, "bias length does not match output columns");
  for (int32_t b : bias) check_bias(b);

  const int64_t acc_lim = (int64_t(1) << (cfg.acc_bits - 1)) - 1;
  QTensor out = QTensor::zeros({r_dim, c_dim}, out_scale, p.out_sign);
  for (int64_t r = 0; r < r_dim; ++r) {
    for (int64_t c = 0; c < c_dim; ++c) {
      int64_t acc = 0;
      if (transpose_w) {
        for (int64_t k = 0; k < k_dim; ++k)
          acc += int64_t(x.at(r, k)) * int64_t(w.at(c, k));
      } else {
        for (int64_t k = 0; k < k_dim; ++k)
          acc += int64_t(x.at(r, k)) * int64_t(w.at(k, c));
      }
      if (!bias.empty()) acc += bias[size_t(c)];
      if (acc < -acc_lim - 1 || acc > acc_lim)
        fail(ErrorKind::overflow,
             "ITA accumulator overflow at (" + std::to_string(r) + "," +
                 std::to_string(c) + ")");
      out.data[size_t(r * c_dim + c)] = int8_t(activate_requantize(acc, act, p));
    }
  }
  return out;
}

/// One attention head: projections, streamed softmax and the partial
/// output projection, emitted as 8-bit per ITA's single output port.
struct AttentionHeadTask {
  QTensor x;                 // [S x E]
  QTensor wq, wk, wv;        // [E x P]
  QTensor wo;                // [P x E]
  std::vector<int32_t> bq, bk, bv, bo;  // 24-bit bias vectors
  QuantParams pq, pk, pv, p_qkt, p_av, p_out;
  ItaMaxConfig softmax;
  double q_scale = 1.0, k_scale = 1.0, v_scale = 1.0, s_scale = 1.0;
  double av_scale = 1.0, out_scale = 1.0;

  void check(const ItaConfig& cfg) const {
    cfg.check_dim(x.rows(), "S");
    cfg.check_dim(x.cols(), "E");
    cfg.check_dim(wq.cols(), "P");
    if (wq.rows() != x.cols() || wk.rows() != x.cols() || wv.rows() != x.cols())
      fail(ErrorKind::shape, "projection weights must be [E x P]");
    if (wk.cols() != wq.cols() || wv.cols() != wq.cols())
      fail(ErrorKind::shape, "projection widths disagree");
    if (wo.rows() != wq.cols() || wo.cols() != x.cols())
      fail(ErrorKind::shape, "output projection must be [P x E]");
  }
};

/// Applies the streaming softmax to a row-major score matrix the way the
/// engine does: row groups of `row_group` rows, each row absorbed left to
/// right, denominators inverted per group, then normalized on the fly.
inline QTensor itamax_matrix(const QTensor& s, const ItaMaxConfig& cfg) {
  const int64_t rows = s.rows(), cols = s.cols();
  QTensor a = QTensor::zeros({rows, cols}, 1.0 / 255.0, Sign::u8);
  for (int64_t g0 = 0; g0 < rows; g0 += cfg.row_group) {
    const int g_rows = int(std::min<int64_t>(cfg.row_group, rows - g0));
    ItaMax engine(g_rows, cfg);
    for (int r = 0; r < g_rows; ++r)
      engine.absorb(r, std::span<const int8_t>(
                           s.data.data() + (g0 + r) * cols, size_t(cols)));
    engine.finalize();
    for (int r = 0; r < g_rows; ++r)
      for (int64_t c = 0; c < cols; ++c)
        a.data[size_t((g0 + r) * cols + c)] = int8_t(
            engine.normalize(r, s.data[size_t((g0 + r) * cols + c)]));
  }
  return a;
}

struct AttentionHeadTrace {
  QTensor q, k, v, s, a, av, out;
};

inline AttentionHeadTrace ita_attention_head_trace(const AttentionHeadTask& t,
                                                   const ItaConfig& cfg = {}) {
  t.check(cfg);
  AttentionHeadTrace tr;
  tr.q = ita_gemm(t.x, t.wq, t.bq, {}, t.pq, cfg, t.q_scale);
  tr.k = ita_gemm(t.x, t.wk, t.bk, {}, t.pk, cfg, t.k_scale);
  tr.v = ita_gemm(t.x, t.wv, t.bv, {}, t.pv, cfg, t.v_scale);
  // Scores stream through the DA stage while Q*K^T is produced.
  tr.s = ita_gemm(tr.q, tr.k, {}, {}, t.p_qkt, cfg, t.s_scale,
                  /*transpose_w=*/true);
  tr.a = itamax_matrix(tr.s, t.softmax);
  tr.av = ita_gemm(tr.a, tr.v, {}, {}, t.p_av, cfg, t.av_scale);
  tr.out = ita_gemm(tr.av, t.wo, t.bo, {}, t.p_out, cfg, t.out_scale);
  return tr;
}

inline QTensor ita_attention_head(const AttentionHeadTask& t,
                                  const ItaConfig& cfg = {}) {
  return ita_attention_head_trace(t, cfg).out;
}

}  // namespace itasim
