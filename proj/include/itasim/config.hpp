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
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "itasim/common.hpp"
#include "itasim/ita.hpp"

namespace itasim {

/// Cluster-level hardware and cost-model parameters. The memory and
/// bandwidth figures describe the modeled cluster; the *_cycles and cp*
/// entries are cost-model constants calibrated against the reference
/// measurements (see README).
struct HwConfig {
  int clock_mhz = 425;
  int n_worker_cores = 8;  // plus one data-mover core driving the DMA
  int tcdm_banks = 32;
  int bank_bytes = 4096;
  int tcdm_word_bytes = 8;  // 64-bit interconnect
  int hwpe_ports = 16;
  int axi_wide_bits = 512;
  int axi_narrow_bits = 64;
  int l1_bytes = 131072;
  int icache_bytes = 8192;       // accounting only
  int l1_reserve_bytes = 10240;  // held back for core stacks/scratch
  int64_t l2_bytes = 64ll * 1024 * 1024;  // abstract background memory

  // DMA / accelerator timing constants.
  int dma_setup_cycles = 16;        // per transfer
  int ita_tile_setup_cycles = 200;  // per ITA output tile (task swap, drain)
  int ita_chunk_fill_cycles = 29;   // per K chunk (pipeline fill/drain)
  int warmup_cycles = 0;            // one-time icache/program warmup

  // Cluster kernel cost constants.
  int cluster_cpm = 9;          // GEMM cycles per MAC per core
  int cluster_cpe = 10;         // elementwise cycles per element per core
  int cluster_softmax_cpe = 20; // softmax cycles per element per core
  int cluster_act_cpe = 15;     // activation cycles per element per core
  int kernel_startup_cycles = 300;  // fork/join + configuration per kernel

  ItaConfig ita;

  int tcdm_bw_bytes_per_cycle() const { return tcdm_banks * tcdm_word_bytes; }
  int hwpe_bw_bytes_per_cycle() const { return hwpe_ports * tcdm_word_bytes; }
  int dma_bytes_per_cycle() const { return axi_wide_bits / 8; }
  int l1_budget_bytes() const { return l1_bytes - l1_reserve_bytes; }
  double peak_gops() const {
    return double(ita.peak_ops_per_cycle()) * clock_mhz / 1000.0;
  }

  void validate() const {
    if (tcdm_banks * bank_bytes != l1_bytes)
      fail(ErrorKind::schema, "tcdm_banks * bank_bytes must equal l1_bytes");
    if (hwpe_ports * tcdm_word_bytes != hwpe_bw_bytes_per_cycle())
      fail(ErrorKind::schema, "hwpe bandwidth inconsistent");
    if (clock_mhz <= 0 || n_worker_cores <= 0)
      fail(ErrorKind::schema, "clock and core count must be positive");
    if (l1_reserve_bytes >= l1_bytes)
      fail(ErrorKind::schema, "l1 reserve exceeds L1 capacity");
  }
};

/// Linear activity-based energy model, calibrated; not a physical power
/// model.
struct EnergyConfig {
  double idle_mw = 20.0;     // always-on (cluster fabric, memories)
  double cluster_mw = 6.0;   // extra while worker cores compute
  double ita_mw = 95.0;      // extra while the accelerator computes
  double dma_mw = 6.0;       // extra while the DMA moves data
  std::string calibration = "table-v1";
};

namespace detail {

struct ConfigField {
  const char* key;
  std::function<std::string(const HwConfig&, const EnergyConfig&)> get;
  std::function<void(HwConfig&, EnergyConfig&, const std::string&)> set;
};

inline int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    fail(ErrorKind::schema, "config key " + key + ": bad integer '" + v + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    fail(ErrorKind::schema, "config key " + key + ": bad number '" + v + "'");
  }
}

inline const std::vector<ConfigField>& config_fields() {
#define ITASIM_INT_FIELD(key, expr)                                          \
  ConfigField {                                                              \
    #key, [](const HwConfig& h, const EnergyConfig&) {                       \
      return std::to_string(expr);                                           \
    },                                                                       \
    [](HwConfig& h, EnergyConfig&, const std::string& v) {                   \
      expr = decltype(expr)(parse_int(#key, v));                             \
    }                                                                        \
  }
#define ITASIM_MW_FIELD(key, expr)                                           \
  ConfigField {                                                              \
    #key, [](const HwConfig&, const EnergyConfig& e) {                       \
      std::ostringstream os;                                                 \
      os << expr;                                                            \
      return os.str();                                                       \
    },                                                                       \
    [](HwConfig&, EnergyConfig& e, const std::string& v) {                   \
      expr = parse_real(#key, v);                                            \
    }                                                                        \
  }
  static const std::vector<ConfigField> fields = {
      ITASIM_INT_FIELD(clock_mhz, h.clock_mhz),
      ITASIM_INT_FIELD(n_worker_cores, h.n_worker_cores),
      ITASIM_INT_FIELD(tcdm_banks, h.tcdm_banks),
      ITASIM_INT_FIELD(bank_bytes, h.bank_bytes),
      ITASIM_INT_FIELD(tcdm_word_bytes, h.tcdm_word_bytes),
      ITASIM_INT_FIELD(hwpe_ports, h.hwpe_ports),
      ITASIM_INT_FIELD(axi_wide_bits, h.axi_wide_bits),
      ITASIM_INT_FIELD(axi_narrow_bits, h.axi_narrow_bits),
      ITASIM_INT_FIELD(l1_bytes, h.l1_bytes),
      ITASIM_INT_FIELD(icache_bytes, h.icache_bytes),
      ITASIM_INT_FIELD(l1_reserve_bytes, h.l1_reserve_bytes),
      ITASIM_INT_FIELD(l2_bytes, h.l2_bytes),
      ITASIM_INT_FIELD(dma_setup_cycles, h.dma_setup_cycles),
      ITASIM_INT_FIELD(ita_tile_setup_cycles, h.ita_tile_setup_cycles),
      ITASIM_INT_FIELD(ita_chunk_fill_cycles, h.ita_chunk_fill_cycles),
      ITASIM_INT_FIELD(warmup_cycles, h.warmup_cycles),
      ITASIM_INT_FIELD(cluster_cpm, h.cluster_cpm),
      ITASIM_INT_FIELD(cluster_cpe, h.cluster_cpe),
      ITASIM_INT_FIELD(cluster_softmax_cpe, h.cluster_softmax_cpe),
      ITASIM_INT_FIELD(cluster_act_cpe, h.cluster_act_cpe),
      ITASIM_INT_FIELD(kernel_startup_cycles, h.kernel_startup_cycles),
      ITASIM_INT_FIELD(ita_units, h.ita.n_units),
      ITASIM_INT_FIELD(ita_vec_len, h.ita.vec_len),
      ITASIM_INT_FIELD(ita_acc_bits, h.ita.acc_bits),
      ITASIM_INT_FIELD(ita_max_dim, h.ita.max_dim),
      ITASIM_MW_FIELD(power_idle_mw, e.idle_mw),
      ITASIM_MW_FIELD(power_cluster_mw, e.cluster_mw),
      ITASIM_MW_FIELD(power_ita_mw, e.ita_mw),
      ITASIM_MW_FIELD(power_dma_mw, e.dma_mw),
  };
#undef ITASIM_INT_FIELD
#undef ITASIM_MW_FIELD
  return fields;
}

}  // namespace detail

/// Parse the flat key=value config format ('#' starts a comment). Keys
/// not present keep their defaults; unknown keys are an error.
inline void parse_config_text(const std::string& text, HwConfig& hw,
                              EnergyConfig& energy) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::schema,
           "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    bool found = false;
    if (key == "energy_calibration") {
      energy.calibration = value;
      found = true;
    }
    for (const auto& f : detail::config_fields()) {
      if (key == f.key) {
        f.set(hw, energy, value);
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorKind::schema, "unknown config key: " + key);
  }
  hw.validate();
}

inline std::string print_config(const HwConfig& hw, const EnergyConfig& energy) {
  std::ostringstream os;
  os << "# itasim hardware/cost model configuration (key=value)\n";
  for (const auto& f : detail::config_fields())
    os << f.key << "=" << f.get(hw, energy) << "\n";
  os << "energy_calibration=" << energy.calibration << "\n";
  return os.str();
}

}  // namespace itasim
