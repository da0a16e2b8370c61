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

#include "rivet/fabric/serialized_call.hpp"

#include <atomic>
#include <cstring>

#include "rivet/common/error.hpp"

namespace rivet::fabric {
namespace {

uint64_t load_acquire(const std::byte* p) {
  return std::atomic_ref<uint64_t>(
             *reinterpret_cast<uint64_t*>(const_cast<std::byte*>(p)))
      .load(std::memory_order_acquire);
}

template <class T>
T read_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace

void serialize_call(std::span<std::byte> out, uint64_t function_id,
                    const ContextParts& context,
                    const std::span<const std::byte>* payload) {
  const size_t ctx_len = context.size();
  const size_t pay_len = payload ? payload->size() : 0;
  const size_t total = serialized_size(ctx_len, payload != nullptr, pay_len);
  if (out.size() != total || total > 0xffffffffu) {
    throw Error(Errc::kTooLarge, "serialized call does not fit its buffer");
  }
  std::byte* p = out.data();
  const uint32_t total32 = static_cast<uint32_t>(total);
  const uint32_t ctx32 = static_cast<uint32_t>(ctx_len);
  const uint8_t flags = payload ? kHasPayload : 0;
  std::memcpy(p, &total32, 4);
  std::memcpy(p + 4, &function_id, 8);
  std::memcpy(p + 12, &ctx32, 4);
  std::memcpy(p + 16, &flags, 1);
  size_t at = kCallHeaderSize;
  if (!context.head.empty()) std::memcpy(p + at, context.head.data(), context.head.size());
  at += context.head.size();
  if (!context.tail.empty()) std::memcpy(p + at, context.tail.data(), context.tail.size());
  at += context.tail.size();
  if (payload) {
    const uint32_t pay32 = static_cast<uint32_t>(pay_len);
    std::memcpy(p + at, &pay32, 4);
    at += 4;
    if (pay_len) std::memcpy(p + at, payload->data(), pay_len);
    at += pay_len;
  }
  std::memset(p + at, 0, total - at);
}

void mark_ready(std::span<std::byte> record) {
  auto* last = reinterpret_cast<uint64_t*>(record.data() + record.size() - 8);
  std::atomic_ref<uint64_t> word(*last);
  uint64_t v = word.load(std::memory_order_relaxed);
  v = (v & 0x00ffffffffffffffull) | (uint64_t{kReadyMarker} << 56);
  word.store(v, std::memory_order_release);
}

Probe probe_call(std::span<const std::byte> area, CallView* out) {
  if (area.size() < kMinCallSize) return Probe::kAbsent;
  const uint64_t first = load_acquire(area.data());
  const uint32_t total = static_cast<uint32_t>(first);
  if (total == 0) return Probe::kAbsent;
  if (total % kCallAlignment != 0 || total < kMinCallSize || total > area.size()) {
    return Probe::kMalformed;
  }
  const uint64_t last = load_acquire(area.data() + total - 8);
  const uint8_t marker = static_cast<uint8_t>(last >> 56);
  if (marker == 0) return Probe::kAbsent;
  if (marker != kReadyMarker) return Probe::kMalformed;

  const std::byte* p = area.data();
  CallView v;
  v.total_length = total;
  v.function_id = read_le<uint64_t>(p + 4);
  const uint32_t ctx_len = read_le<uint32_t>(p + 12);
  v.flags = read_le<uint8_t>(p + 16);
  if ((v.flags & ~kHasPayload) != 0) return Probe::kMalformed;
  size_t at = kCallHeaderSize;
  if (ctx_len > total || at + ctx_len + 1 > total) return Probe::kMalformed;
  v.context = {p + at, ctx_len};
  at += ctx_len;
  size_t pay_len = 0;
  if (v.has_payload()) {
    if (at + 4 + 1 > total) return Probe::kMalformed;
    pay_len = read_le<uint32_t>(p + at);
    at += 4;
    if (pay_len > total || at + pay_len + 1 > total) return Probe::kMalformed;
    v.payload = {p + at, pay_len};
  }
  if (serialized_size(ctx_len, v.has_payload(), pay_len) != total) {
    return Probe::kMalformed;
  }
  if (out) *out = v;
  return Probe::kReady;
}

}  // namespace rivet::fabric
