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
#include <string>
#include <string_view>

#include "rivet/regmem/circular_allocator.hpp"
#include "rivet/verbs/device.hpp"

namespace rivet::fabric {

enum class AggMode : uint8_t { kTrad, kOvfl };
enum class HandlingMode : uint8_t { kDirect, kHelper };

struct SystemConfig {
  // Placement.
  uint32_t machines = 1;
  uint32_t processes_per_machine = 1;
  uint32_t threads_per_process = 1;
  uint32_t zones_per_machine = 0;  // 0: one zone per process

  // Transport.
  uint32_t u_max = 64;
  uint32_t recv_depth = 64;
  uint32_t recv_size = 4096;
  verbs::Execution execution = verbs::Execution::kImmediate;
  verbs::Backend backend = verbs::Backend::kInProcess;

  // Registered memory.
  uint64_t slab_size = 1u << 20;
  uint64_t unit_size = 64u << 10;
  uint32_t ring_initial = 4;
  mem::Growth ring_growth = mem::Growth::kExponential;
  uint32_t ring_max = 64;
  uint64_t general_cap = 64u << 20;

  // Channels.
  uint64_t chunk_size = 64u << 10;
  uint32_t c = 2;
  uint32_t c_max = 16;
  uint64_t consumed_pull_threshold = 0;  // 0: never pull

  // Aggregation.
  AggMode agg_mode = AggMode::kTrad;
  uint64_t agg_flush_bytes = 4096;
  uint64_t agg_exceed_cap = 64u << 20;
  uint64_t agg_idle_flush_us = 0;  // 0: off

  // Runtime.
  uint32_t broadcast_arity = 2;
  HandlingMode handling = HandlingMode::kDirect;
  uint64_t finalize_timeout_ms = 60000;
  uint64_t seed = 1;

  uint32_t process_count() const { return machines * processes_per_machine; }
  uint32_t thread_count() const { return process_count() * threads_per_process; }
  uint32_t zones() const {
    return zones_per_machine != 0 ? zones_per_machine : processes_per_machine;
  }
};

// Throws Error(kConfig) describing the first problem found.
void validate(const SystemConfig& config);

// Parses "key = value" lines; '#' starts a comment. Unknown keys and bad
// values throw Error(kConfig).
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::string& path);
// Applies one key/value pair to `config`.
void apply_option(SystemConfig& config, std::string_view key,
                  std::string_view value);

}  // namespace rivet::fabric
