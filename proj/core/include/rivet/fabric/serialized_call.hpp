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

#include <cstddef>
#include <cstdint>
#include <span>

namespace rivet::fabric {

// Record layout, little endian:
//   [total_length u32][function_id u64][context_length u32][flags u8]
//   [context][payload_length u32][payload]   (payload part iff kHasPayload)
//   zero padding up to a multiple of 8, ready marker in the final byte.
inline constexpr size_t kCallHeaderSize = 17;
inline constexpr size_t kCallAlignment = 8;
inline constexpr size_t kMinCallSize = 24;
inline constexpr uint8_t kReadyMarker = 0xA5;
inline constexpr uint8_t kHasPayload = 0x01;

// Context given as up to two pieces that are concatenated on the wire, so a
// system prefix can be prepended without a staging copy.
struct ContextParts {
  std::span<const std::byte> head;
  std::span<const std::byte> tail;

  size_t size() const { return head.size() + tail.size(); }
};

constexpr size_t round_up8(size_t n) { return (n + 7) & ~size_t{7}; }

constexpr size_t serialized_size(size_t context_len, bool has_payload,
                                 size_t payload_len) {
  return round_up8(kCallHeaderSize + context_len +
                   (has_payload ? 4 + payload_len : 0) + 1);
}

// Writes the record without its ready marker. `out` must be exactly
// serialized_size(...) bytes; throws Error(kTooLarge) otherwise.
void serialize_call(std::span<std::byte> out, uint64_t function_id,
                    const ContextParts& context,
                    const std::span<const std::byte>* payload);

// Publishes the record by setting the ready marker with a release store.
void mark_ready(std::span<std::byte> record);

// Both steps; for records that become visible to readers only as a whole.
inline void serialize_ready(std::span<std::byte> out, uint64_t function_id,
                            const ContextParts& context,
                            const std::span<const std::byte>* payload) {
  serialize_call(out, function_id, context, payload);
  mark_ready(out);
}

enum class Probe : uint8_t { kReady, kAbsent, kMalformed };

struct CallView {
  uint32_t total_length = 0;
  uint64_t function_id = 0;
  uint8_t flags = 0;
  std::span<const std::byte> context;
  std::span<const std::byte> payload;

  bool has_payload() const { return (flags & kHasPayload) != 0; }
};

// Checks whether a complete record starts at area[0]. Reads the first and
// final words with acquire loads; a record is ready only when both ends are
// visible. `area` must be 8-byte aligned.
Probe probe_call(std::span<const std::byte> area, CallView* out);

}  // namespace rivet::fabric
