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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rivet/verbs/device.hpp"

namespace rivet::mem {

// Names registered memory on exactly one machine.
struct RemoteLocator {
  verbs::MachineId machine = 0;
  verbs::RegionId region = 0;
  uint64_t offset = 0;
  uint64_t length = 0;

  bool valid() const { return length > 0; }
  RemoteLocator slice(uint64_t off, uint64_t len) const {
    return {machine, region, offset + off, len};
  }
  verbs::RemoteTarget target(uint64_t off = 0) const {
    return {region, offset + off};
  }
  bool operator==(const RemoteLocator&) const = default;
};

// Recycling tag: for every queue pair the memory was last transmitted on, the
// flush number that must be exceeded before the memory can be reused.
class RecycleTag {
 public:
  struct Entry {
    verbs::QpId qp_id;
    const std::atomic<uint64_t>* flush_counter;
    uint64_t flush;
  };

  void mark(verbs::QpId qp_id, const std::atomic<uint64_t>* flush_counter,
            uint64_t flush);
  // True iff every tagging queue pair's flush number exceeds its entry.
  bool reusable() const;
  void clear() { entries_.clear(); }
  bool empty() const { return entries_.empty(); }
  std::span<const Entry> entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

class RegisteredMemory {
 public:
  static constexpr uint64_t npos = std::numeric_limits<uint64_t>::max();

  RegisteredMemory() = default;
  RegisteredMemory(verbs::MemoryRegion* region, uint64_t offset,
                   uint64_t length, RecycleTag* tag = nullptr)
      : region_(region), offset_(offset), length_(length), tag_(tag) {}

  bool valid() const { return region_ != nullptr; }
  verbs::MemoryRegion* region() const { return region_; }
  uint64_t offset() const { return offset_; }
  uint64_t length() const { return length_; }
  uint32_t zone() const { return region_->zone(); }
  RecycleTag* tag() const { return tag_; }
  void set_tag(RecycleTag* tag) { tag_ = tag; }

  std::byte* data() const { return region_->data() + offset_; }
  std::span<std::byte> bytes() const { return {data(), length_}; }

  verbs::LocalSegment segment(uint64_t off = 0, uint64_t len = npos) const {
    if (len == npos) len = length_ - off;
    return {region_->id(), offset_ + off, len};
  }
  RemoteLocator locator() const {
    return {region_->machine(), region_->id(), offset_, length_};
  }
  // Sub-range sharing this handle's tag.
  RegisteredMemory slice(uint64_t off, uint64_t len) const {
    return {region_, offset_ + off, len, tag_};
  }

 private:
  verbs::MemoryRegion* region_ = nullptr;
  uint64_t offset_ = 0;
  uint64_t length_ = 0;
  RecycleTag* tag_ = nullptr;
};

}  // namespace rivet::mem
