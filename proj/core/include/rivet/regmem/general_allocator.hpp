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
#include <optional>
#include <vector>

#include "rivet/common/ownership.hpp"
#include "rivet/regmem/registered_memory.hpp"
#include "rivet/regmem/zone_arena.hpp"

namespace rivet::mem {

// Best-fit allocator over arena slabs (ties go to the lowest address); frees
// coalesce with adjacent free blocks. Single owner.
class GeneralAllocator {
 public:
  static constexpr uint64_t kGranule = 8;

  GeneralAllocator(ZoneArena& arena, uint64_t cap_bytes);

  // Throws Error(kInvalidArgument / kTooLarge / kOutOfMemory).
  RegisteredMemory allocate(uint64_t length);
  std::optional<RegisteredMemory> try_allocate(uint64_t length);
  void free(const RegisteredMemory& block);

  uint64_t bytes_in_use() const { return in_use_; }
  uint64_t cap() const { return cap_; }
  size_t chunk_count() const { return chunks_.size(); }
  void share_owner() { owner_.share(); }

 private:
  struct Chunk {
    RegisteredMemory memory;
    std::map<uint64_t, uint64_t> free_blocks;  // offset -> size
  };

  ZoneArena& arena_;
  uint64_t cap_;
  uint64_t in_use_ = 0;
  std::vector<Chunk> chunks_;
  // (chunk index, offset) -> rounded size
  std::map<std::pair<size_t, uint64_t>, uint64_t> live_;
  OwnerCheck owner_;
};

}  // namespace rivet::mem
