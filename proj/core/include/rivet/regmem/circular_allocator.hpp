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
#include <memory>
#include <optional>
#include <vector>

#include "rivet/common/ownership.hpp"
#include "rivet/regmem/registered_memory.hpp"
#include "rivet/regmem/zone_arena.hpp"

namespace rivet::mem {

enum class Growth : uint8_t { kNone, kLinear, kExponential };

struct RingConfig {
  uint64_t unit_size = 64u << 10;
  uint32_t initial_units = 4;
  Growth growth = Growth::kExponential;
  uint32_t max_units = 64;
};

// Ring of fixed-size registered units, each carrying a recycling tag. A unit
// is handed out again only once its tag allows reuse. Single owner.
class CircularAllocator {
 public:
  CircularAllocator(ZoneArena& arena, const RingConfig& config = {});

  // Empty result means would-block: the next unit is still in flight and the
  // ring cannot grow.
  std::optional<RegisteredMemory> allocate();

  size_t size() const { return ring_.size(); }
  uint64_t unit_size() const { return config_.unit_size; }
  const RingConfig& config() const { return config_; }
  // Unit at ring position i (ring order, not allocation order).
  const RegisteredMemory& unit(size_t i) const { return ring_[i]->memory; }
  uint64_t would_block_count() const { return would_block_; }
  void share_owner() { owner_.share(); }

 private:
  struct Unit {
    RegisteredMemory memory;
    std::unique_ptr<RecycleTag> tag;
  };
  std::unique_ptr<Unit> make_unit();

  ZoneArena& arena_;
  RingConfig config_;
  std::vector<std::unique_ptr<Unit>> ring_;
  size_t cursor_ = 0;
  uint64_t would_block_ = 0;
  OwnerCheck owner_;
};

// Packs variable-size segments into circular-allocator units. Segments share
// their unit's tag. Single owner.
class LinearCircularAllocator {
 public:
  explicit LinearCircularAllocator(CircularAllocator& ring) : ring_(ring) {}

  // Throws Error(kTooLarge) when length exceeds the unit size; empty result
  // means would-block.
  std::optional<RegisteredMemory> allocate(uint64_t length);

  CircularAllocator& ring() { return ring_; }

 private:
  CircularAllocator& ring_;
  RegisteredMemory current_;
  uint64_t used_ = 0;
};

}  // namespace rivet::mem
