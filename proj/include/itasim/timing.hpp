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
#include <map>
#include <string>
#include <vector>

#include "itasim/common.hpp"
#include "itasim/config.hpp"

namespace itasim {

enum class Engine : uint8_t { none, ita, cluster };

inline const char* engine_name(Engine e) {
  switch (e) {
    case Engine::none: return "none";
    case Engine::ita: return "ita";
    case Engine::cluster: return "cluster";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Per-operation cost functions.

/// ITA compute cycles for one vec_len x vec_len output tile accumulated
/// over `k_chunks` chunks of the inner dimension: each chunk costs
/// vec_len^2 dot products over n_units units (256 cycles at 16x64).
inline int64_t ita_tile_cycles(int64_t k_chunks, const ItaConfig& cfg = {}) {
  if (k_chunks <= 0) fail(ErrorKind::shape, "k_chunks must be positive");
  return k_chunks * cfg.tile_chunk_cycles();
}

/// DMA transfer cost over the wide AXI: payload at 64 B/cycle plus a
/// fixed setup latency per transfer.
inline int64_t dma_cycles(int64_t bytes, const HwConfig& hw) {
  if (bytes < 0) fail(ErrorKind::shape, "negative transfer size");
  return ceil_div(bytes, hw.dma_bytes_per_cycle()) + hw.dma_setup_cycles;
}

/// HWPE streamer occupancy: the four streamers time-multiplex one
/// 128 B/cycle interface.
inline int64_t streamer_cycles(int64_t bytes_in, int64_t bytes_out,
                               const HwConfig& hw) {
  return ceil_div(bytes_in + bytes_out, hw.hwpe_bw_bytes_per_cycle());
}

enum class ClusterKind : uint8_t { gemm, elementwise, softmax, activation };

/// Cluster kernel cost: startup plus per-MAC and per-element constants
/// divided across the worker cores.
inline int64_t cluster_kernel_cycles(ClusterKind kind, int64_t elements,
                                     int64_t macs, const HwConfig& hw) {
  int64_t per_element = 0;
  switch (kind) {
    case ClusterKind::gemm: per_element = 0; break;
    case ClusterKind::elementwise: per_element = hw.cluster_cpe; break;
    case ClusterKind::softmax: per_element = hw.cluster_softmax_cpe; break;
    case ClusterKind::activation: per_element = hw.cluster_act_cpe; break;
  }
  return hw.kernel_startup_cycles +
         ceil_div(macs * hw.cluster_cpm, hw.n_worker_cores) +
         ceil_div(elements * per_element, hw.n_worker_cores);
}

/// The worst-case per-tile transfer set: two vec_len^2 8-bit operands,
/// vec_len 24-bit biases in, one vec_len^2 8-bit tile out, against the
/// tile's compute floor. 48.75 B/cycle at the default geometry.
inline double worst_case_dma_demand(const ItaConfig& cfg = {}) {
  const int64_t bytes = 2 * cfg.vec_len * cfg.vec_len + 3 * cfg.vec_len +
                        cfg.vec_len * cfg.vec_len;
  return double(bytes) / double(cfg.tile_chunk_cycles());
}

// ---------------------------------------------------------------------------
// Schedule-level composition.

/// Timing inputs of one schedule step. DMA-in covers this step's own
/// input stream (double-buffered against the neighbouring steps' compute
/// by the composition below); `dma_in_lead` is the slice that cannot be
/// hidden when the pipeline has nothing running yet (first chunk set).
struct StepCost {
  Engine engine = Engine::none;
  int64_t compute = 0;      // pure compute cycles (MAC array / cores busy)
  int64_t fill = 0;         // pipeline fill / task-swap overhead
  int64_t dma_in = 0;       // full input stream incl. per-transfer setup
  int64_t dma_in_lead = 0;  // exposed prologue when nothing overlaps it
  int64_t dma_out = 0;      // output writeback
  int64_t bytes_moved = 0;
  int64_t ops = 0;
  std::string node;  // owning graph node (layer tagging)
};

struct StepRecord {
  std::string node;
  Engine engine = Engine::none;
  int64_t cycles = 0;   // contribution to the timeline
  int64_t compute = 0;
  int64_t dma = 0;      // exposed DMA cycles
  int64_t stall = 0;    // fill + DMA wait
};

struct LayerCycles {
  int64_t cycles = 0;
  int64_t ops = 0;
};

/// Cycle and energy accounting for one run.
struct CycleReport {
  int64_t total_cycles = 0;
  int64_t compute_cycles = 0;
  int64_t dma_cycles = 0;    // exposed (un-overlapped) DMA
  int64_t stall_cycles = 0;
  int64_t mac_cycles_busy = 0;  // ITA MAC array busy
  int64_t ita_busy_cycles = 0;  // incl. pipeline fill
  int64_t cluster_busy_cycles = 0;
  int64_t dma_busy_cycles = 0;  // total DMA activity, hidden or not
  int64_t ops_total = 0;
  int64_t bytes_moved = 0;
  double utilization = 0.0;  // ops_total / (peak ops/cycle * total)
  double energy_mj = 0.0;
  std::vector<StepRecord> steps;
  std::vector<std::pair<std::string, LayerCycles>> layers;

  double seconds(const HwConfig& hw) const {
    return double(total_cycles) / (double(hw.clock_mhz) * 1e6);
  }
  double gops(const HwConfig& hw) const {
    const double s = seconds(hw);
    return s > 0 ? double(ops_total) / s / 1e9 : 0.0;
  }
  double gop_per_joule() const {
    return energy_mj > 0 ? double(ops_total) / (energy_mj * 1e6) : 0.0;
  }
};

inline double energy_mj(const CycleReport& r, const HwConfig& hw,
                        const EnergyConfig& e) {
  const double cycle_s = 1.0 / (double(hw.clock_mhz) * 1e6);
  // mW * s = mJ
  return (e.idle_mw * double(r.total_cycles) +
          e.cluster_mw * double(r.cluster_busy_cycles) +
          e.ita_mw * double(r.ita_busy_cycles) +
          e.dma_mw * double(r.dma_busy_cycles)) *
         cycle_s;
}

/// Compose per-step costs into a timeline. In steady state a step costs
/// max(compute + fill, its own DMA stream, the previous step's
/// writeback); the first step's lead transfers and the last step's
/// writeback are exposed. Deterministic: pure arithmetic over the list.
inline CycleReport overlap_schedule(const std::vector<StepCost>& steps,
                                    const HwConfig& hw) {
  CycleReport r;
  r.total_cycles = hw.warmup_cycles;
  if (hw.warmup_cycles > 0)
    r.steps.push_back({"<warmup>", Engine::none, hw.warmup_cycles, 0, 0,
                       hw.warmup_cycles});
  r.stall_cycles += hw.warmup_cycles;
  int64_t prev_out = 0;
  for (size_t i = 0; i < steps.size(); ++i) {
    const StepCost& s = steps[i];
    StepRecord rec;
    rec.node = s.node;
    rec.engine = s.engine;
    rec.compute = s.compute;
    int64_t latency = std::max(s.compute + s.fill,
                               std::max(s.dma_in, prev_out));
    if (i == 0) latency += s.dma_in_lead;  // nothing to hide it behind
    rec.cycles = latency;
    rec.stall = s.fill;
    rec.dma = latency - s.compute - s.fill;
    if (i == 0) rec.dma = std::max(rec.dma, s.dma_in_lead);
    r.total_cycles += latency;
    r.compute_cycles += s.compute;
    r.stall_cycles += s.fill;
    r.dma_cycles += rec.dma;
    if (s.engine == Engine::ita) {
      r.mac_cycles_busy += s.compute;
      r.ita_busy_cycles += s.compute + s.fill;
    } else if (s.engine == Engine::cluster) {
      r.cluster_busy_cycles += s.compute + s.fill;
    }
    r.dma_busy_cycles += s.dma_in + s.dma_out;
    r.bytes_moved += s.bytes_moved;
    r.ops_total += s.ops;
    prev_out = s.dma_out;
    r.steps.push_back(rec);
  }
  if (!steps.empty() && prev_out > 0) {
    r.total_cycles += prev_out;
    r.dma_cycles += prev_out;
    r.steps.push_back({"<writeback>", Engine::none, prev_out, 0, prev_out, 0});
  }
  if (r.total_cycles > 0)
    r.utilization = double(r.ops_total) /
                    (double(hw.ita.peak_ops_per_cycle()) * double(r.total_cycles));
  return r;
}

/// Fold per-step records into per-layer buckets keyed by the node name
/// prefix up to the first '/'.
inline void aggregate_layers(CycleReport& r) {
  std::vector<std::pair<std::string, LayerCycles>> layers;
  std::map<std::string, size_t> idx;
  for (const StepRecord& s : r.steps) {
    const size_t slash = s.node.find('/');
    const std::string key =
        slash == std::string::npos ? s.node : s.node.substr(0, slash);
    auto it = idx.find(key);
    if (it == idx.end()) {
      idx[key] = layers.size();
      layers.push_back({key, {}});
      it = idx.find(key);
    }
    layers[it->second].second.cycles += s.cycles;
  }
  r.layers = std::move(layers);
}

}  // namespace itasim
