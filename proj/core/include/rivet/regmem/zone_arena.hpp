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
#include <map>
#include <mutex>
#include <vector>

#include "rivet/regmem/registered_memory.hpp"

namespace rivet::mem {

struct ArenaConfig {
  uint64_t slab_size = 1u << 20;
  uint64_t cap_bytes = 0;  // 0 = unlimited
};

// Per (machine, zone) source of registered memory. Registration happens per
// slab; blocks are carved from slabs and never straddle two. Thread-safe.
class ZoneArena {
 public:
  static constexpr uint64_t kAlignment = 64;

  ZoneArena(verbs::Machine& machine, uint32_t zone,
            const ArenaConfig& config = {});

  // Throws Error(kInvalidArgument / kTooLarge / kCapacity).
  RegisteredMemory allocate(uint64_t length);
  void release(const RegisteredMemory& block);

  verbs::Machine& machine() const { return machine_; }
  uint32_t zone() const { return zone_; }
  uint64_t slab_size() const { return config_.slab_size; }
  uint64_t slab_count() const;

 private:
  verbs::Machine& machine_;
  uint32_t zone_;
  ArenaConfig config_;
  mutable std::mutex mu_;
  std::vector<verbs::MemoryRegion*> slabs_;
  uint64_t bump_ = 0;
  std::map<uint64_t, std::vector<RegisteredMemory>> free_;
};

}  // namespace rivet::mem
