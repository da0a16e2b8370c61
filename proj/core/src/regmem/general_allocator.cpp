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

#include "rivet/regmem/general_allocator.hpp"

#include <string>

#include "rivet/common/error.hpp"

namespace rivet::mem {

GeneralAllocator::GeneralAllocator(ZoneArena& arena, uint64_t cap_bytes)
    : arena_(arena), cap_(cap_bytes) {}

std::optional<RegisteredMemory> GeneralAllocator::try_allocate(uint64_t length) {
  owner_.check("general allocator");
  if (length == 0) throw Error(Errc::kInvalidArgument, "zero-length allocation");
  const uint64_t need = (length + kGranule - 1) / kGranule * kGranule;
  if (need > arena_.slab_size()) {
    throw Error(Errc::kTooLarge, "allocation exceeds slab size");
  }
  if (in_use_ + need > cap_) return std::nullopt;

  size_t best_chunk = 0;
  uint64_t best_offset = 0;
  uint64_t best_size = 0;
  bool found = false;
  for (size_t c = 0; c < chunks_.size(); ++c) {
    for (const auto& [off, size] : chunks_[c].free_blocks) {
      if (size >= need && (!found || size < best_size)) {
        best_chunk = c;
        best_offset = off;
        best_size = size;
        found = true;
      }
    }
  }
  if (!found) {
    Chunk chunk;
    chunk.memory = arena_.allocate(arena_.slab_size());
    chunk.free_blocks[0] = chunk.memory.length();
    chunks_.push_back(std::move(chunk));
    best_chunk = chunks_.size() - 1;
    best_offset = 0;
    best_size = chunks_.back().memory.length();
  }
  Chunk& chunk = chunks_[best_chunk];
  chunk.free_blocks.erase(best_offset);
  if (best_size > need) chunk.free_blocks[best_offset + need] = best_size - need;
  live_[{best_chunk, best_offset}] = need;
  in_use_ += need;
  return chunk.memory.slice(best_offset, length);
}

RegisteredMemory GeneralAllocator::allocate(uint64_t length) {
  auto block = try_allocate(length);
  if (!block) {
    throw Error(Errc::kOutOfMemory,
                "general allocator cap of " + std::to_string(cap_) +
                    " bytes exceeded by request of " + std::to_string(length));
  }
  return *block;
}

void GeneralAllocator::free(const RegisteredMemory& block) {
  owner_.check("general allocator");
  for (size_t c = 0; c < chunks_.size(); ++c) {
    Chunk& chunk = chunks_[c];
    if (chunk.memory.region() != block.region()) continue;
    const uint64_t base = chunk.memory.offset();
    if (block.offset() < base || block.offset() >= base + chunk.memory.length()) {
      continue;
    }
    const uint64_t off = block.offset() - base;
    auto live = live_.find({c, off});
    if (live == live_.end()) {
      throw Error(Errc::kInvalidArgument, "free of unknown block");
    }
    uint64_t size = live->second;
    live_.erase(live);
    in_use_ -= size;
    uint64_t start = off;
    auto next = chunk.free_blocks.lower_bound(off);
    if (next != chunk.free_blocks.end() && next->first == off + size) {
      size += next->second;
      next = chunk.free_blocks.erase(next);
    }
    if (next != chunk.free_blocks.begin()) {
      auto prev = std::prev(next);
      if (prev->first + prev->second == start) {
        start = prev->first;
        size += prev->second;
        chunk.free_blocks.erase(prev);
      }
    }
    chunk.free_blocks[start] = size;
    return;
  }
  throw Error(Errc::kInvalidArgument, "free of block not owned by this allocator");
}

}  // namespace rivet::mem
