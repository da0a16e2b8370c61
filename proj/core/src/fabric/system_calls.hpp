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

#include "rivet/common/synchronizer.hpp"
#include "rivet/fabric/registry.hpp"

namespace rivet::fabric::sys {

inline constexpr uint64_t kBase = FunctionRegistry::kSystemBase;
inline constexpr uint64_t kChannelShutdown = kBase + 1;
inline constexpr uint64_t kChunkAlloc = kBase + 2;
inline constexpr uint64_t kNotify = kBase + 3;
inline constexpr uint64_t kConsume = kBase + 4;
inline constexpr uint64_t kBufferWritten = kBase + 5;
inline constexpr uint64_t kBufferRead = kBase + 6;
inline constexpr uint64_t kReturn = kBase + 7;
inline constexpr uint64_t kBroadcast = kBase + 8;

enum NotifyKind : uint32_t { kNone = 0, kBySend = 1, kBySlot = 2 };

// How the destination reports back to the source's synchronizer.
struct NotifySpec {
  uint64_t token = 0;  // synchronizer address in the source process
  uint32_t kind = kNone;
  uint32_t slots_machine = 0;
  uint32_t slots_region = 0;
  uint32_t reserved = 0;
  uint64_t slots_offset = 0;
};

inline NotifySpec notify_spec(Synchronizer* sync) {
  NotifySpec s;
  if (sync == nullptr) return s;
  s.token = reinterpret_cast<uint64_t>(sync);
  if (const WriteBackSlots* slots = sync->write_back()) {
    s.kind = kBySlot;
    s.slots_machine = slots->machine;
    s.slots_region = slots->region;
    s.slots_offset = slots->offset;
  } else {
    s.kind = kBySend;
  }
  return s;
}

struct ConsumePrefix {
  uint64_t fn;
  NotifySpec notify;
};

struct BufferWrittenPrefix {
  uint64_t fn;
  uint32_t region;
  uint32_t consume;
  uint64_t offset;
  uint64_t length;
  NotifySpec notify;
};

struct BufferReadPrefix {
  uint64_t fn;
  uint32_t machine;
  uint32_t region;
  uint64_t offset;
  uint64_t length;
  uint32_t async;
  uint32_t consume;
  NotifySpec notify;
};

struct ReturnPrefix {
  uint64_t fn;
  uint32_t machine;
  uint32_t region;
  uint64_t offset;
  uint64_t length;
  NotifySpec notify;
};

struct BroadcastPrefix {
  uint64_t fn;
  uint32_t root;
  uint32_t arity;
  NotifySpec notify;
};

struct NotifyArgs {
  uint64_t token;
  uint64_t count;
  uint64_t failed;
};

struct ChunkAllocArgs {
  uint32_t sender;
  uint32_t receiver;
  uint32_t count;
  uint32_t initial;
  uint32_t resp_machine;
  uint32_t resp_region;
  uint64_t resp_offset;
  uint32_t wb_machine;
  uint32_t wb_region;
  uint64_t wb_offset;
};

// Response written back to the requester: count, then one (region, offset)
// pair per chunk, then a nonzero done word.
inline constexpr uint64_t chunk_response_size(uint32_t count) {
  return 8 + 16ull * count + 8;
}

}  // namespace rivet::fabric::sys
