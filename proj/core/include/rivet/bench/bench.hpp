// Copyright 2026 The Rivet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rivet/fabric/config.hpp"
#include "rivet/mcts/search.hpp"
#include "rivet/verbs/device.hpp"

namespace rivet::bench {

// "8..65536" (powers of two, inclusive) or "8,64,256". Throws Error(kConfig).
std::vector<uint64_t> parse_sizes(std::string_view text);

struct Placement {
  uint32_t machines = 1;
  uint32_t processes = 1;
  uint32_t threads = 1;

  std::string str() const;
};

// "MxPxT". Throws Error(kConfig).
Placement parse_placement(std::string_view text);

struct TransportOptions {
  std::vector<uint64_t> sizes{8, 64};
  uint64_t count = 10000;
  uint32_t reps = 3;
  uint32_t u_max = 64;
  verbs::Backend backend = verbs::Backend::kInProcess;
};

struct TransportRow {
  std::string mode;  // "raw" or "raw+auto"
  uint64_t size = 0;
  double msgs_per_sec = 0;
  double mb_per_sec = 0;
  uint64_t bytes = 0;  // written by the device, summed over repetitions
  uint64_t signaled = 0;
};

// Loopback WRITE stream, once with hand-placed signaling on the bare queue
// pair and once through a Transmitter.
std::vector<TransportRow> run_transport(const TransportOptions& options);

inline const std::vector<std::string> kInvokeModes = {"send", "write", "trad", "ovfl",
                                                      "max-raw"};

struct InvokeOptions {
  std::vector<uint64_t> sizes{8, 64, 256};
  std::vector<std::string> modes = kInvokeModes;
  uint64_t count = 20000;
  uint32_t reps = 3;
  fabric::SystemConfig base;  // placement is overridden to two machines
};

struct InvokeRow {
  std::string mode;
  uint64_t size = 0;
  double calls_per_sec = 0;
  double mb_per_sec = 0;
  uint64_t transfers = 0;  // aggregator channel writes, trad and ovfl only
};

// One thread on each of two machines; the first calls the second `count`
// times with a `size`-byte context. max-raw moves the same bytes as bare
// WRITEs with no invocation. Throws Error(kConfig) on an unknown mode.
std::vector<InvokeRow> run_invoke(const InvokeOptions& options);

struct MctsOptions {
  Placement placement;
  uint32_t phases = 1;
  uint32_t hex_n = 7;
  uint32_t reps = 3;
  mcts::SearchConfig search;
  fabric::SystemConfig base;
};

struct MctsRow {
  std::string config;
  uint64_t visits = 0;       // root visits
  uint64_t completions = 0;  // rollouts backpropagated to the root
  double rollouts_per_sec = 0;
  bool conserved = false;  // every repetition
  std::string failure;
};

// Visits and completions are from the last repetition; the rate is the mean.
MctsRow run_mcts(const MctsOptions& options);

void write_csv(std::ostream& out, const std::vector<TransportRow>& rows);
void write_csv(std::ostream& out, const std::vector<InvokeRow>& rows);
void write_csv(std::ostream& out, const std::vector<MctsRow>& rows);

}  // namespace rivet::bench
