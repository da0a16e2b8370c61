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

#include <string>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome shared_transmitter_safety();
Outcome signaling_ratio();
Outcome channel_stream_integrity();
Outcome channel_backpressure_boundary();
Outcome split_write_safety();
Outcome primitive_semantics();
Outcome aggregation_transfers_and_ordering();
Outcome search_conservation();
Outcome ucb_against_direct_formula();
Outcome hex_against_oracles();
Outcome search_determinism();
Outcome scaling_smoke();

}  // namespace acceptance
