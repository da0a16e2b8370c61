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

#include "rivet/regmem/zone_arena.hpp"

#include <cstring>
#include <string>

#include "rivet/common/error.hpp"

namespace rivet::mem {

ZoneArena::ZoneArena(verbs::Machine& machine, uint32_t zone,
                     const ArenaConfig& config)
    : machine_(machine), zone_(zone), config_(config) {
  if (zone >= machine.zones()) {
    throw Error(Errc::kUnknownZone, "zone " + std::to_string(zone) +
                                        " does not exist on machine " +
                                        std::to_string(machine.id()));
  }
  if (config_.slab_size == 0 || config_.slab_size % kAlignment != 0) {
    throw Error(Errc::kInvalidArgument, "slab size must be a positive multiple of 64");
  }
}

RegisteredMemory ZoneArena::allocate(uint64_t length) {
  if (length == 0) throw Error(Errc::kInvalidArgument, "zero-length allocation");
  if (length > config_.slab_size) {
    throw Error(Errc::kTooLarge, "allocation of " + std::to_string(length) +
                                     " bytes exceeds slab size " +
                                     std::to_string(config_.slab_size));
  }
  const uint64_t size = (length + kAlignment - 1) / kAlignment * kAlignment;
  std::lock_guard lock(mu_);
  auto it = free_.find(size);
  if (it != free_.end() && !it->second.empty()) {
    RegisteredMemory block = it->second.back();
    it->second.pop_back();
    std::memset(block.data(), 0, size);
    return {block.region(), block.offset(), length};
  }
  if (slabs_.empty() || bump_ + size > config_.slab_size) {
    if (config_.cap_bytes != 0 &&
        (slabs_.size() + 1) * config_.slab_size > config_.cap_bytes) {
      throw Error(Errc::kCapacity, "zone arena cap reached");
    }
    slabs_.push_back(&machine_.register_memory(zone_, config_.slab_size));
    bump_ = 0;
  }
  RegisteredMemory block(slabs_.back(), bump_, length);
  bump_ += size;
  return block;
}

void ZoneArena::release(const RegisteredMemory& block) {
  if (!block.valid()) return;
  const uint64_t size =
      (block.length() + kAlignment - 1) / kAlignment * kAlignment;
  std::lock_guard lock(mu_);
  free_[size].push_back(RegisteredMemory(block.region(), block.offset(), size));
}

uint64_t ZoneArena::slab_count() const {
  std::lock_guard lock(mu_);
  return slabs_.size();
}

}  // namespace rivet::mem
