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

#include "rivet/verbs/device.hpp"

namespace rivet::verbs::detail {

// How a queue pair reaches its peer machine.
class Link {
 public:
  virtual ~Link() = default;

  // Post-time validation of a remote range.
  virtual PostStatus check_remote(RegionId region, uint64_t offset,
                                  uint64_t length) = 0;
  // Post-time reservation of a peer RECV for a SEND of `length` bytes.
  virtual PostStatus reserve_recv(uint64_t length,
                                  QueuePair::RecvEntry* out) = 0;

  virtual bool write(RegionId region, uint64_t offset, const std::byte* src,
                     uint64_t length, QpStats* stats) = 0;
  virtual bool read(RegionId region, uint64_t offset, std::byte* dst,
                    uint64_t length) = 0;
  virtual bool send(const QueuePair::RecvEntry& reserved, const std::byte* src,
                    uint64_t length) = 0;
};

class InProcessLink final : public Link {
 public:
  InProcessLink(Network& net, QueuePair* peer) : net_(net), peer_(peer) {}

  PostStatus check_remote(RegionId region, uint64_t offset,
                          uint64_t length) override;
  PostStatus reserve_recv(uint64_t length, QueuePair::RecvEntry* out) override;
  bool write(RegionId region, uint64_t offset, const std::byte* src,
             uint64_t length, QpStats* stats) override;
  bool read(RegionId region, uint64_t offset, std::byte* dst,
            uint64_t length) override;
  bool send(const QueuePair::RecvEntry& reserved, const std::byte* src,
            uint64_t length) override;

 private:
  Network& net_;
  QueuePair* peer_;
};

}  // namespace rivet::verbs::detail
