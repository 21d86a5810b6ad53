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
#include <optional>
#include <vector>

#include "itasim/common.hpp"

namespace itasim {

// Cycle-stepped TCDM bank contention. Used for microbenchmark studies;
// end-to-end runs use the analytic tile-level model.

/// L1 addresses interleave across banks by 8-byte words.
inline int bank_of(int64_t address, int banks = 32, int word_bytes = 8) {
  return int((address / word_bytes) % banks);
}

struct BankRequest {
  int requester = 0;
  int bank = 0;
  int64_t issue_cycle = 0;
};

struct Grant {
  int requester = 0;
  int bank = 0;
  int64_t issue_cycle = 0;
  int64_t grant_cycle = 0;
};

struct ContentionResult {
  std::vector<Grant> grants;   // in grant order (cycle, then bank)
  int64_t total_cycles = 0;
  int64_t max_latency = 0;     // grant_cycle - issue_cycle, worst case
};

/// Round-robin arbitration: one grant per bank per cycle, losers retry
/// next cycle, per-bank pointer advances past the granted requester. A
/// requester has at most one outstanding request; its queued requests
/// issue in order once the previous one is granted.
inline ContentionResult contention_sim(
    const std::vector<std::vector<BankRequest>>& per_requester, int banks) {
  const int n_req = int(per_requester.size());
  std::vector<size_t> next(per_requester.size(), 0);
  struct Pending {
    bool active = false;
    BankRequest req;
  };
  std::vector<Pending> pending(per_requester.size());
  std::vector<int> rr(size_t(banks), 0);  // next requester to favor per bank

  ContentionResult result;
  int64_t outstanding = 0;
  for (const auto& q : per_requester) {
    outstanding += int64_t(q.size());
    for (size_t i = 1; i < q.size(); ++i)
      if (q[i].issue_cycle < q[i - 1].issue_cycle)
        fail(ErrorKind::shape, "bank requests must be issued in cycle order");
  }

  int64_t cycle = 0;
  const int64_t guard = 64 + 4 * (outstanding + 8) * int64_t(n_req + 1);
  while (outstanding > 0) {
    if (cycle > guard) fail(ErrorKind::internal, "arbiter failed to drain");
    // Admit newly issued requests.
    for (int r = 0; r < n_req; ++r) {
      auto& q = per_requester[size_t(r)];
      if (!pending[size_t(r)].active && next[size_t(r)] < q.size() &&
          q[next[size_t(r)]].issue_cycle <= cycle) {
        pending[size_t(r)] = {true, q[next[size_t(r)]]};
        ++next[size_t(r)];
      }
    }
    // One grant per bank, round-robin from the per-bank pointer.
    for (int b = 0; b < banks; ++b) {
      std::optional<int> winner;
      for (int k = 0; k < n_req; ++k) {
        const int r = (rr[size_t(b)] + k) % n_req;
        if (pending[size_t(r)].active && pending[size_t(r)].req.bank == b) {
          winner = r;
          break;
        }
      }
      if (!winner) continue;
      const Pending& p = pending[size_t(*winner)];
      result.grants.push_back({*winner, b, p.req.issue_cycle, cycle});
      result.max_latency =
          std::max(result.max_latency, cycle - p.req.issue_cycle);
      pending[size_t(*winner)].active = false;
      --outstanding;
      rr[size_t(b)] = (*winner + 1) % n_req;
    }
    ++cycle;
  }
  result.total_cycles = cycle;
  return result;
}

}  // namespace itasim
