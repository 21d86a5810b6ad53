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
#include <span>
#include <string>
#include <vector>

#include "itasim/common.hpp"
#include "itasim/ita.hpp"
#include "itasim/itamax.hpp"
#include "itasim/quant.hpp"

namespace itasim {

// Fallback kernels for the worker cores. Same requantize/activation
// epilogue as the accelerator model, so a graph mapped to the cluster and
// the same graph mapped to ITA produce bit-identical tensors; only the
// timing differs. The cluster accumulates in 32 bits.

constexpr int kClusterAccBits = 32;

inline QTensor cluster_gemm(const QTensor& x, const QTensor& w,
                            std::span<const int32_t> bias,
                            const QuantParams& p, const ActMode& act = {},
                            double out_scale = 1.0, bool transpose_w = false) {
  const int64_t r_dim = x.rows(), k_dim = x.cols();
  const int64_t c_dim = transpose_w ? w.rows() : w.cols();
  const int64_t wk = transpose_w ? w.cols() : w.rows();
  if (r_dim <= 0 || k_dim <= 0 || c_dim <= 0)
    fail(ErrorKind::shape, "gemm dimensions must be positive");
  if (wk != k_dim)
    fail(ErrorKind::shape, "gemm inner dimensions disagree: " +
                               std::to_string(k_dim) + " vs " +
                               std::to_string(wk));
  if (!bias.empty() && int64_t(bias.size()) != c_dim)
    fail(ErrorKind::shape, "bias length does not match output columns");

  const int64_t acc_lim = (int64_t(1) << (kClusterAccBits - 1)) - 1;
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
             "cluster accumulator overflow at (" + std::to_string(r) + "," +
                 std::to_string(c) + ")");
      out.data[size_t(r * c_dim + c)] = int8_t(activate_requantize(acc, act, p));
    }
  }
  return out;
}

/// Sum the per-head partial outputs in 32 bits, then requantize once.
/// Order-independent by construction.
inline QTensor head_accumulate(std::span<const QTensor> partials,
                               const QuantParams& p) {
  if (partials.empty()) fail(ErrorKind::shape, "head_accumulate of nothing");
  const QTensor& first = partials.front();
  for (const QTensor& t : partials) {
    if (t.shape != first.shape)
      fail(ErrorKind::shape, "head partial shapes disagree");
    if (t.scale != first.scale)
      fail(ErrorKind::shape, "head partial scales disagree");
  }
  const int64_t n = first.numel();
  const int64_t acc_lim = (int64_t(1) << (kClusterAccBits - 1)) - 1;
  QTensor out = QTensor::zeros(first.shape, first.scale, p.out_sign);
  for (int64_t i = 0; i < n; ++i) {
    int64_t acc = 0;
    for (const QTensor& t : partials) acc += t.element(i);
    if (acc < -acc_lim - 1 || acc > acc_lim)
      fail(ErrorKind::overflow, "head accumulation overflow");
    out.data[size_t(i)] = int8_t(requantize(acc, p));
  }
  return out;
}

/// Per-column gamma*x + beta in 32 bits, then requantize (NoNorm-style
/// normalization; gamma/beta fixed-point encoding is the caller's).
inline QTensor elementwise_affine(const QTensor& x,
                                  std::span<const int32_t> gamma,
                                  std::span<const int32_t> beta,
                                  const QuantParams& p,
                                  double out_scale = 1.0) {
  const int64_t cols = x.cols(), n = x.numel();
  if (int64_t(gamma.size()) != cols || int64_t(beta.size()) != cols)
    fail(ErrorKind::shape, "affine gamma/beta length must match columns");
  const int64_t acc_lim = (int64_t(1) << (kClusterAccBits - 1)) - 1;
  QTensor out = QTensor::zeros(x.shape, out_scale, p.out_sign);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t c = i % cols;
    const int64_t acc =
        int64_t(gamma[size_t(c)]) * x.element(i) + beta[size_t(c)];
    if (acc < -acc_lim - 1 || acc > acc_lim)
      fail(ErrorKind::overflow, "affine overflow");
    out.data[size_t(i)] = int8_t(requantize(acc, p));
  }
  return out;
}

inline QTensor add_residual(const QTensor& a, const QTensor& b,
                            const QuantParams& p, double out_scale = 1.0) {
  if (a.shape != b.shape) fail(ErrorKind::shape, "residual shapes disagree");
  QTensor out = QTensor::zeros(a.shape, out_scale, p.out_sign);
  for (int64_t i = 0; i < a.numel(); ++i)
    out.data[size_t(i)] =
        int8_t(requantize(int64_t(a.element(i)) + b.element(i), p));
  return out;
}

/// Baseline softmax on the cores: shares the ItaMax code path so the
/// no-accelerator run is numerically identical to the accelerated one.
inline QTensor cluster_softmax(const QTensor& x, const ItaMaxConfig& cfg = {}) {
  if (x.sign != Sign::i8)
    fail(ErrorKind::shape, "softmax input must be signed 8-bit");
  return itamax_matrix(x, cfg);
}

}  // namespace itasim
