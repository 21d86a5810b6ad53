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

#include <random>

#include "itasim/arbiter.hpp"
#include "oracles.hpp"

using namespace itasim;

TEST_CASE("addresses interleave across banks by 8-byte words", "[arbiter]") {
  CHECK(bank_of(0) == 0);
  CHECK(bank_of(7) == 0);
  CHECK(bank_of(8) == 1);
  CHECK(bank_of(8 * 32) == 0);
  CHECK(bank_of(8 * 33 + 3) == 1);
}

TEST_CASE("distinct banks are granted in the same cycle", "[arbiter]") {
  std::vector<std::vector<BankRequest>> streams(4);
  for (int r = 0; r < 4; ++r) streams[size_t(r)] = {{r, r, 0}};
  const ContentionResult res = contention_sim(streams, 32);
  CHECK(res.total_cycles == 1);
  CHECK(res.max_latency == 0);
}

TEST_CASE("two requesters on one bank split cycles round-robin", "[arbiter]") {
  std::vector<std::vector<BankRequest>> streams(2);
  streams[0] = {{0, 5, 0}};
  streams[1] = {{1, 5, 0}};
  const ContentionResult res = contention_sim(streams, 32);
  REQUIRE(res.grants.size() == 2);
  CHECK(res.grants[0].grant_cycle == 0);
  CHECK(res.grants[1].grant_cycle == 1);
  CHECK(res.max_latency == 1);
}

TEST_CASE("fairness bound holds exhaustively for up to 4 requesters on 2 banks",
          "[arbiter]") {
  // All assignments of 3 back-to-back requests per requester over 2 banks.
  for (int n_req = 1; n_req <= 4; ++n_req) {
    const int slots = n_req * 3;
    for (int mask = 0; mask < (1 << slots); ++mask) {
      std::vector<std::vector<BankRequest>> streams(size_t(n_req));
      for (int r = 0; r < n_req; ++r)
        for (int i = 0; i < 3; ++i)
          streams[size_t(r)].push_back(
              {r, (mask >> (r * 3 + i)) & 1, int64_t(i)});
      const ContentionResult res = contention_sim(streams, 2);
      CAPTURE(n_req, mask);
      // Starvation freedom: a requester waits at most one round of the
      // contenders on its bank.
      REQUIRE(res.max_latency <= n_req);
      REQUIRE(res.grants.size() == size_t(slots));
    }
  }
}

TEST_CASE("seeded random traces match the reference arbiter", "[arbiter]") {
  std::mt19937 rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> n_req_d(1, 17), banks_d(1, 32),
        len_d(0, 40), gap_d(0, 3);
    const int n_req = n_req_d(rng), banks = banks_d(rng);
    std::uniform_int_distribution<int> bank_d(0, banks - 1);
    std::vector<std::vector<BankRequest>> streams(size_t(n_req));
    for (int r = 0; r < n_req; ++r) {
      int64_t cycle = 0;
      const int len = len_d(rng);
      for (int i = 0; i < len; ++i) {
        cycle += gap_d(rng);
        streams[size_t(r)].push_back({r, bank_d(rng), cycle});
      }
    }
    const ContentionResult got = contention_sim(streams, banks);
    const auto ref = oracle::ref_arbiter(streams, banks);
    REQUIRE(got.grants.size() == ref.size());
    for (size_t i = 0; i < ref.size(); ++i) {
      CAPTURE(trial, i);
      REQUIRE(got.grants[i].requester == ref[i].requester);
      REQUIRE(got.grants[i].grant_cycle == ref[i].grant);
    }
  }
}
