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

#include "rivet/fabric/config.hpp"

namespace rivet::fabric {

// Flat ids are dense: flat = (machine * P + local_process) * T + thread.
struct ThreadId {
  uint32_t machine = 0;
  uint32_t local_process = 0;  // index within the machine
  uint32_t process = 0;        // global process index
  uint32_t thread = 0;         // index within the process
  uint32_t flat = 0;

  bool operator==(const ThreadId&) const = default;
};

inline ThreadId thread_id(const SystemConfig& c, uint32_t flat) {
  ThreadId id;
  id.flat = flat;
  id.thread = flat % c.threads_per_process;
  id.process = flat / c.threads_per_process;
  id.local_process = id.process % c.processes_per_machine;
  id.machine = id.process / c.processes_per_machine;
  return id;
}

inline uint32_t flat_id(const SystemConfig& c, uint32_t machine,
                        uint32_t local_process, uint32_t thread) {
  return (machine * c.processes_per_machine + local_process) *
             c.threads_per_process +
         thread;
}

}  // namespace rivet::fabric
